use std::io::{BufRead, BufReader, Read, Write};

use ctxbench_core::datamodel::GraphBuilder;
use ctxbench_core::{ContextGraph, ContextId, DataError, EntityId};

use super::IoError;

/// Non-blank, non-comment lines split on tabs, with their 1-based line numbers.
fn tsv_lines<R: Read>(input: R) -> impl Iterator<Item = Result<(u64, Vec<String>), IoError>> {
    BufReader::new(input).lines().enumerate().filter_map(|(i, line)| {
        let lineno = i as u64 + 1;
        match line {
            Err(e) => Some(Err(IoError::row(lineno, e))),
            Ok(l) => {
                let l = l.trim_end_matches('\r');
                if l.trim().is_empty() || l.starts_with('#') {
                    None
                } else {
                    Some(Ok((lineno, l.split('\t').map(|f| f.trim().to_string()).collect())))
                }
            }
        }
    })
}

fn entity(line: u64, s: &str) -> Result<EntityId, IoError> {
    EntityId::new(s).map_err(|e| IoError::row(line, e))
}

/// Reads an undirected edge list (`src<TAB>dst[<TAB>weight]`, a lone `node`
/// declares an isolated node) and an optional membership list
/// (`node<TAB>context`). Repeated edges collapse to one. Membership may only
/// name nodes that the edge list declared.
pub fn parse_graph<E: Read, M: Read>(edges: E, membership: Option<M>) -> Result<ContextGraph, IoError> {
    let mut b = GraphBuilder::new();
    let mut known = std::collections::BTreeSet::new();
    for item in tsv_lines(edges) {
        let (line, fields) = item?;
        match fields.as_slice() {
            [node] => {
                let n = entity(line, node)?;
                b.add_node(&n);
                known.insert(n);
            }
            [src, dst] | [src, dst, _] => {
                let (a, c) = (entity(line, src)?, entity(line, dst)?);
                let weight = match fields.get(2) {
                    Some(w) => Some(
                        w.parse::<f64>()
                            .map_err(|_| IoError::row(line, format!("weight {w:?} is not a number")))?,
                    ),
                    None => None,
                };
                b.add_edge(&a, &c, weight).map_err(|e| match e {
                    DataError::SelfLoop(_) | DataError::NonPositiveWeight(_) => IoError::Data(e),
                    other => IoError::row(line, other),
                })?;
                known.insert(a);
                known.insert(c);
            }
            _ => return Err(IoError::row(line, format!("expected 1 to 3 tab-separated fields, found {}", fields.len()))),
        }
    }
    if let Some(m) = membership {
        for item in tsv_lines(m) {
            let (line, fields) = item?;
            let [node, ctx] = fields.as_slice() else {
                return Err(IoError::row(line, format!("expected node<TAB>context, found {} fields", fields.len())));
            };
            let node = entity(line, node)?;
            if !known.contains(&node) {
                return Err(DataError::UnknownNode(node.to_string()).into());
            }
            let ctx = ContextId::new(ctx.as_str()).map_err(|e| IoError::row(line, e))?;
            b.add_membership(&node, &ctx);
        }
    }
    Ok(b.build())
}

/// Writes the edge list and membership list read by [`parse_graph`].
/// Isolated nodes are written as single-field lines.
pub fn write_graph<E: Write, M: Write>(g: &ContextGraph, mut edges: E, mut membership: M) -> Result<(), IoError> {
    for i in 0..g.node_count() as u32 {
        if g.degree(i) == 0 {
            writeln!(edges, "{}", g.node(i))?;
        }
    }
    for (a, b, w) in g.edges() {
        if w == 1.0 {
            writeln!(edges, "{}\t{}", g.node(a), g.node(b))?;
        } else {
            writeln!(edges, "{}\t{}\t{}", g.node(a), g.node(b), w)?;
        }
    }
    let contexts: Vec<ContextId> = g.contexts().cloned().collect();
    for c in &contexts {
        for &i in g.context_members(c).unwrap_or(&[]) {
            writeln!(membership, "{}\t{}", g.node(i), c)?;
        }
    }
    edges.flush()?;
    membership.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(edges: &str, members: &str) -> Result<ContextGraph, IoError> {
        parse_graph(edges.as_bytes(), Some(members.as_bytes()))
    }

    #[test]
    fn path_graph() {
        let g = parse("a\tb\nb\tc\n# comment\nb\ta\n", "a\tct1\nb\tct1\n").unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.degree(g.index_of("b").unwrap()), 2);
        let ct1 = ContextId::new("ct1").unwrap();
        assert_eq!(g.context_members(&ct1).unwrap().len(), 2);
    }

    #[test]
    fn errors() {
        assert!(matches!(parse("a\ta\n", ""), Err(IoError::Data(DataError::SelfLoop(_)))));
        assert!(matches!(parse("a\tb\t0\n", ""), Err(IoError::Data(DataError::NonPositiveWeight(_)))));
        assert!(matches!(parse("a\tb\n", "z\tct\n"), Err(IoError::Data(DataError::UnknownNode(n))) if n == "z"));
        assert!(matches!(parse("a\tb\tx\n", ""), Err(IoError::MalformedRow { line: 1, .. })));
    }

    #[test]
    fn round_trip() {
        let g = parse("a\tb\t2.5\nb\tc\nlonely\n", "a\tct1\nc\tct2\n").unwrap();
        let (mut e, mut m) = (Vec::new(), Vec::new());
        write_graph(&g, &mut e, &mut m).unwrap();
        let back = parse_graph(e.as_slice(), Some(m.as_slice())).unwrap();
        assert_eq!(back.node_count(), 4);
        let canon = |g: &ContextGraph| {
            let mut v: Vec<_> = g
                .edges()
                .map(|(a, b, w)| {
                    let (x, y) = (g.node(a).to_string(), g.node(b).to_string());
                    (x.clone().min(y.clone()), x.max(y), w)
                })
                .collect();
            v.sort_by(|p, q| p.0.cmp(&q.0).then(p.1.cmp(&q.1)));
            v
        };
        let (edges, orig) = (canon(&back), canon(&g));
        assert_eq!(edges, orig);
    }
}
