use serde_json::{json, Value};

fn error_response(desc: &str) -> Value {
    json!({"description": desc, "content": {"application/json": {"schema": {"$ref": "#/components/schemas/Error"}}}})
}

fn ok(desc: &str, schema: Value) -> Value {
    json!({"description": desc, "content": {"application/json": {"schema": schema}}})
}

fn path_param(name: &str, desc: &str) -> Value {
    json!({"name": name, "in": "path", "required": true, "description": desc, "schema": {"type": "string"}})
}

fn query_param(name: &str, ty: &str, desc: &str) -> Value {
    json!({"name": name, "in": "query", "required": false, "description": desc, "schema": {"type": ty}})
}

/// OpenAPI 3.1 description of every route.
pub fn spec_document() -> Value {
    json!({
        "openapi": "3.1.0",
        "info": {"title": "ctxbench", "version": env!("CARGO_PKG_VERSION")},
        "paths": {
            "/v1/datasets": {"get": {
                "summary": "Registered dataset versions",
                "responses": {"200": ok("dataset summaries", json!({"type": "array", "items": {"type": "object"}}))}
            }},
            "/v1/datasets/{name}/{version}/rows": {"get": {
                "summary": "One page of rows, optionally filtered; label columns of benchmark datasets are withheld",
                "parameters": [
                    path_param("name", "dataset name"),
                    path_param("version", "integer version or `latest`"),
                    query_param("filter", "string", "clauses such as `col == x and n >= 3` joined by `and`"),
                    query_param("limit", "integer", "page size, 1 to 10000, default 1000"),
                    query_param("cursor", "string", "opaque cursor from the previous page")
                ],
                "responses": {
                    "200": ok("row page", json!({"$ref": "#/components/schemas/RowsPage"})),
                    "400": error_response("bad filter, limit or cursor"),
                    "404": error_response("unknown dataset")
                }
            }},
            "/v1/benchmarks/{group}/split": {"get": {
                "summary": "Deterministic split; test rows carry no labels",
                "parameters": [path_param("group", "group id"), query_param("seed", "integer", "split seed, default 0")],
                "responses": {
                    "200": ok("split document", json!({"type": "object"})),
                    "404": error_response("unknown group"),
                    "422": error_response("split cannot be formed")
                }
            }},
            "/v1/benchmarks/{group}/evaluate": {"post": {
                "summary": "Score test-fold predictions for one seed and record them on the leaderboard",
                "parameters": [path_param("group", "group id")],
                "requestBody": {"required": true, "content": {"application/json": {"schema": {
                    "type": "object",
                    "required": ["seed", "predictions"],
                    "properties": {
                        "seed": {"type": "integer"},
                        "submission_id": {"type": "string"},
                        "predictions": {"type": "array", "items": {
                            "type": "object",
                            "required": ["entity", "context", "score"],
                            "properties": {
                                "entity": {"type": "string"},
                                "context": {"type": "string"},
                                "score": {"type": "number", "minimum": 0, "maximum": 1}
                            }
                        }}
                    }
                }}}},
                "responses": {
                    "200": ok("metric report", json!({"type": "object"})),
                    "400": error_response("malformed, missing or unknown predictions"),
                    "404": error_response("unknown group"),
                    "422": error_response("a context slice has a single class")
                }
            }},
            "/v1/leaderboards/{group}": {"get": {
                "summary": "Newest entry per submission, best primary metric first",
                "parameters": [path_param("group", "group id")],
                "responses": {
                    "200": ok("entries", json!({"type": "array", "items": {"type": "object"}})),
                    "404": error_response("unknown group")
                }
            }},
            "/v1/spec": {"get": {
                "summary": "This document",
                "responses": {"200": ok("OpenAPI document", json!({"type": "object"}))}
            }}
        },
        "components": {"schemas": {
            "Error": {"type": "object", "required": ["error", "message"], "properties": {
                "error": {"type": "string"}, "message": {"type": "string"}
            }},
            "RowsPage": {"type": "object", "properties": {
                "name": {"type": "string"},
                "version": {"type": "integer"},
                "content_hash": {"type": "string"},
                "columns": {"type": "array", "items": {"type": "string"}},
                "rows": {"type": "array", "items": {"type": "array", "items": {"type": "string"}}},
                "offset": {"type": "integer"},
                "next_cursor": {"type": ["string", "null"]},
                "withheld_columns": {"type": "array", "items": {"type": "string"}}
            }}
        }}
    })
}
