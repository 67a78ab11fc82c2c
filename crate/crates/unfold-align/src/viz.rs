//! Static chevron visualizations of u-alignments, plus DOT output for
//! alignment orders.
//!
//! A labeled DAG is recursively split into sequential blocks (the
//! components of its incomparability graph, which are totally ordered
//! against each other) and parallel blocks (the components of its
//! comparability graph). N-shaped residues that admit neither cut are
//! rendered as stacked rows with explicit arrows. Rendering uses integer
//! geometry only, so equal inputs give byte-identical SVG.

use crate::aligner::{MovePart, NodeKind, UAlignment};
use crate::dag::{self, BitMatrix};
use crate::scalar::CostValue;
use std::fmt::Write as _;

/// Recursive layout structure over node indices of the rendered graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Block {
    Leaf(u32),
    Sequence(Vec<Block>),
    Parallel(Vec<Block>),
    /// Fallback for sub-DAGs admitting neither cut: topologically sorted
    /// rows with explicit dependency arrows.
    Residual {
        nodes: Vec<u32>,
        edges: Vec<(u32, u32)>,
    },
}

#[derive(Debug, Clone)]
pub struct ChevronLayout {
    pub root: Block,
    pub n: usize,
}

/// Partitions a labeled DAG into the chevron block tree.
pub fn partition(n: usize, edges: &[(u32, u32)]) -> ChevronLayout {
    if n == 0 {
        return ChevronLayout {
            root: Block::Parallel(vec![]),
            n,
        };
    }
    let reach = dag::closure(n, edges);
    let all: Vec<u32> = (0..n as u32).collect();
    let root = split(&all, &reach, edges);
    ChevronLayout { root, n }
}

fn comparable(reach: &BitMatrix, a: u32, b: u32) -> bool {
    reach.get(a as usize, b as usize) || reach.get(b as usize, a as usize)
}

/// Connected components of `nodes` under `related`, each sorted, ordered
/// by smallest member.
fn components(nodes: &[u32], related: impl Fn(u32, u32) -> bool) -> Vec<Vec<u32>> {
    let mut comp: Vec<Vec<u32>> = Vec::new();
    let mut assigned = vec![usize::MAX; nodes.len()];
    for (i, &v) in nodes.iter().enumerate() {
        if assigned[i] != usize::MAX {
            continue;
        }
        let id = comp.len();
        assigned[i] = id;
        let mut stack = vec![v];
        let mut members = vec![v];
        while let Some(u) = stack.pop() {
            for (j, &w) in nodes.iter().enumerate() {
                if assigned[j] == usize::MAX && related(u, w) {
                    assigned[j] = id;
                    stack.push(w);
                    members.push(w);
                }
            }
        }
        members.sort_unstable();
        comp.push(members);
    }
    comp
}

fn split(nodes: &[u32], reach: &BitMatrix, edges: &[(u32, u32)]) -> Block {
    if nodes.len() == 1 {
        return Block::Leaf(nodes[0]);
    }
    // Sequential cut: incomparability components are blockwise totally
    // ordered; two or more of them make a sequence.
    let inset = |x: u32| nodes.binary_search(&x).is_ok();
    let mut seq = components(nodes, |a, b| a != b && !comparable(reach, a, b));
    if seq.len() >= 2 {
        seq.sort_by(|x, y| {
            let (a, b) = (x[0], y[0]);
            if reach.get(a as usize, b as usize) {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Greater
            }
        });
        return Block::Sequence(seq.iter().map(|c| split(c, reach, edges)).collect());
    }
    // Parallel cut: comparability components are mutually unordered.
    let par = components(nodes, |a, b| a != b && comparable(reach, a, b));
    if par.len() >= 2 {
        return Block::Parallel(par.iter().map(|c| split(c, reach, edges)).collect());
    }
    // Neither cut applies (an N-shaped residue): stacked rows.
    let local_edges: Vec<(u32, u32)> = edges
        .iter()
        .copied()
        .filter(|&(u, v)| inset(u) && inset(v))
        .collect();
    let reduced = reduce_within(nodes, &local_edges);
    let mut ordered = nodes.to_vec();
    ordered.sort_by_key(|&v| {
        // Topological rank: number of ancestors within the subset.
        nodes
            .iter()
            .filter(|&&u| reach.get(u as usize, v as usize))
            .count()
    });
    Block::Residual {
        nodes: ordered,
        edges: reduced,
    }
}

fn reduce_within(nodes: &[u32], edges: &[(u32, u32)]) -> Vec<(u32, u32)> {
    // Compact to local indices, reduce, map back.
    let local: Vec<(u32, u32)> = edges
        .iter()
        .map(|&(u, v)| {
            (
                nodes.binary_search(&u).unwrap() as u32,
                nodes.binary_search(&v).unwrap() as u32,
            )
        })
        .collect();
    dag::transitive_reduction(nodes.len(), &local)
        .into_iter()
        .map(|(u, v)| (nodes[u as usize], nodes[v as usize]))
        .collect()
}

/// Pixel geometry per leaf: x span and row index.
#[derive(Debug, Clone, Default)]
pub struct Geometry {
    pub spans: Vec<(i64, i64, i64)>,
    pub rows: i64,
    pub width: i64,
}

const CH_H: i64 = 30;
const ROW_GAP: i64 = 10;
const BLOCK_GAP: i64 = 14;

fn leaf_width(label: &str) -> i64 {
    (label.chars().count() as i64 * 9 + 34).max(72)
}

fn measure(block: &Block, labels: &[String]) -> (i64, i64) {
    match block {
        Block::Leaf(v) => (leaf_width(&labels[*v as usize]), 1),
        Block::Sequence(children) => {
            let mut w = 0;
            let mut rows = 1;
            for c in children {
                let (cw, cr) = measure(c, labels);
                w += cw + BLOCK_GAP;
                rows = rows.max(cr);
            }
            (w - BLOCK_GAP, rows)
        }
        Block::Parallel(children) => {
            let mut w = 0;
            let mut rows = 0;
            for c in children {
                let (cw, cr) = measure(c, labels);
                w = w.max(cw);
                rows += cr;
            }
            (w, rows)
        }
        Block::Residual { nodes, .. } => {
            let w = nodes
                .iter()
                .map(|&v| leaf_width(&labels[v as usize]))
                .max()
                .unwrap_or(72);
            (w + 24, nodes.len() as i64)
        }
    }
}

fn place(block: &Block, labels: &[String], x: i64, row: i64, geo: &mut Geometry) {
    match block {
        Block::Leaf(v) => {
            let w = leaf_width(&labels[*v as usize]);
            geo.spans[*v as usize] = (x, x + w, row);
        }
        Block::Sequence(children) => {
            let mut cx = x;
            for c in children {
                let (cw, _) = measure(c, labels);
                place(c, labels, cx, row, geo);
                cx += cw + BLOCK_GAP;
            }
        }
        Block::Parallel(children) => {
            let mut cr = row;
            for c in children {
                let (_, rows) = measure(c, labels);
                place(c, labels, x, cr, geo);
                cr += rows;
            }
        }
        Block::Residual { nodes, .. } => {
            for (i, &v) in nodes.iter().enumerate() {
                let w = leaf_width(&labels[v as usize]);
                geo.spans[v as usize] = (x + 12, x + 12 + w, row + i as i64);
            }
        }
    }
}

/// Computes leaf geometry for a partitioned graph.
pub fn layout(layout: &ChevronLayout, labels: &[String]) -> Geometry {
    let mut geo = Geometry {
        spans: vec![(0, 0, 0); layout.n],
        rows: 0,
        width: 0,
    };
    if layout.n == 0 {
        return geo;
    }
    let (w, rows) = measure(&layout.root, labels);
    geo.width = w;
    geo.rows = rows;
    place(&layout.root, labels, 0, 0, &mut geo);
    geo
}

fn collect_residual_edges(block: &Block, out: &mut Vec<(u32, u32)>) {
    match block {
        Block::Leaf(_) => {}
        Block::Sequence(c) | Block::Parallel(c) => {
            c.iter().for_each(|b| collect_residual_edges(b, out))
        }
        Block::Residual { edges, .. } => out.extend_from_slice(edges),
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

const COLOR_SYNC: &str = "#2e7d32";
const COLOR_LOG: &str = "#ef6c00";
const COLOR_MODEL: &str = "#1565c0";
const COLOR_TAU: &str = "#9e9e9e";

struct Strip {
    labels: Vec<String>,
    colors: Vec<&'static str>,
    striped: Vec<bool>,
    geo: Geometry,
    residual_edges: Vec<(u32, u32)>,
}

fn strip_for(
    labels: Vec<String>,
    colors: Vec<&'static str>,
    striped: Vec<bool>,
    edges: &[(u32, u32)],
) -> Strip {
    let part = partition(labels.len(), edges);
    let geo = layout(&part, &labels);
    let mut residual_edges = Vec::new();
    collect_residual_edges(&part.root, &mut residual_edges);
    Strip {
        labels,
        colors,
        striped,
        geo,
        residual_edges,
    }
}

fn chevron_path(x0: i64, x1: i64, y: i64) -> String {
    let notch = 10;
    format!(
        "M {x0} {y} L {} {y} L {x1} {} L {} {} L {x0} {} L {} {} Z",
        x1 - notch,
        y + CH_H / 2,
        x1 - notch,
        y + CH_H,
        y + CH_H,
        x0 + notch,
        y + CH_H / 2
    )
}

fn render_strip(svg: &mut String, strip: &Strip, dx: i64, dy: i64) {
    for i in 0..strip.labels.len() {
        let (x0, x1, row) = strip.geo.spans[i];
        let y = dy + row * (CH_H + ROW_GAP);
        let path = chevron_path(dx + x0, dx + x1, y);
        let _ = writeln!(
            svg,
            "  <path d=\"{path}\" fill=\"{}\" stroke=\"#263238\" stroke-width=\"1\"/>",
            strip.colors[i]
        );
        if strip.striped[i] {
            let _ = writeln!(svg, "  <path d=\"{path}\" fill=\"url(#hatch)\"/>");
        }
        let _ = writeln!(
            svg,
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"monospace\" \
             font-size=\"13\" fill=\"#ffffff\">{}</text>",
            dx + (x0 + x1) / 2,
            y + CH_H / 2 + 5,
            xml_escape(&strip.labels[i])
        );
    }
    for &(u, v) in &strip.residual_edges {
        let (ux0, ux1, urow) = strip.geo.spans[u as usize];
        let (vx0, _, vrow) = strip.geo.spans[v as usize];
        let uy = dy + urow * (CH_H + ROW_GAP) + CH_H / 2;
        let vy = dy + vrow * (CH_H + ROW_GAP) + CH_H / 2;
        let _ = writeln!(
            svg,
            "  <line x1=\"{}\" y1=\"{uy}\" x2=\"{}\" y2=\"{vy}\" stroke=\"#455a64\" \
             stroke-width=\"1\" marker-end=\"url(#arrow)\"/>",
            dx + ux1 - (ux1 - ux0) / 8,
            dx + vx0 + 4
        );
    }
}

/// Renders a u-alignment as two stacked chevron strips (log above, model
/// below) with φ connectors between synchronous pairs; log-only moves are
/// hatched. Output is deterministic for equal input.
pub fn render_svg<C: CostValue>(ua: &UAlignment<C>) -> String {
    let log_labels: Vec<String> = ua.log_side.labels.iter().map(|l| l.display()).collect();
    let model_labels: Vec<String> = ua.model_side.labels.iter().map(|l| l.display()).collect();
    let sync_log: Vec<bool> = {
        let mut v = vec![false; log_labels.len()];
        for &(l, _) in &ua.phi {
            v[l as usize] = true;
        }
        v
    };
    let sync_model: Vec<bool> = {
        let mut v = vec![false; model_labels.len()];
        for &(_, m) in &ua.phi {
            v[m as usize] = true;
        }
        v
    };
    let log_colors: Vec<&'static str> = sync_log
        .iter()
        .map(|&is_sync| if is_sync { COLOR_SYNC } else { COLOR_LOG })
        .collect();
    let log_striped: Vec<bool> = sync_log.iter().map(|&s| !s).collect();
    let model_colors: Vec<&'static str> = ua
        .model_side
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            if sync_model[i] {
                COLOR_SYNC
            } else if matches!(l, MovePart::Tau) {
                COLOR_TAU
            } else {
                COLOR_MODEL
            }
        })
        .collect();
    let model_striped = vec![false; model_labels.len()];

    let log_strip = strip_for(log_labels, log_colors, log_striped, &ua.log_side.edges);
    let model_strip = strip_for(
        model_labels,
        model_colors,
        model_striped,
        &ua.model_side.edges,
    );

    let margin = 16i64;
    let strip_gap = 56i64;
    let log_h = (log_strip.geo.rows.max(1)) * (CH_H + ROW_GAP) - ROW_GAP;
    let model_h = (model_strip.geo.rows.max(1)) * (CH_H + ROW_GAP) - ROW_GAP;
    let width = log_strip.geo.width.max(model_strip.geo.width).max(40) + 2 * margin;
    let height = margin + log_h + strip_gap + model_h + margin;
    let model_dy = margin + log_h + strip_gap;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">"
    );
    svg.push_str(
        "  <defs>\n    <pattern id=\"hatch\" width=\"6\" height=\"6\" \
         patternTransform=\"rotate(45)\" patternUnits=\"userSpaceOnUse\">\n      <rect \
         width=\"6\" height=\"6\" fill=\"none\"/>\n      <line x1=\"0\" y1=\"0\" x2=\"0\" \
         y2=\"6\" stroke=\"#ffffff\" stroke-width=\"2\" stroke-opacity=\"0.55\"/>\n    \
         </pattern>\n    <marker id=\"arrow\" viewBox=\"0 0 8 8\" refX=\"7\" refY=\"4\" \
         markerWidth=\"6\" markerHeight=\"6\" orient=\"auto\">\n      <path d=\"M 0 0 L 8 4 L 0 \
         8 z\" fill=\"#455a64\"/>\n    </marker>\n  </defs>\n",
    );
    // φ connectors behind the chevrons.
    for &(l, m) in &ua.phi {
        let (lx0, lx1, lrow) = log_strip.geo.spans[l as usize];
        let (mx0, mx1, mrow) = model_strip.geo.spans[m as usize];
        let x1 = margin + (lx0 + lx1) / 2;
        let y1 = margin + lrow * (CH_H + ROW_GAP) + CH_H;
        let x2 = margin + (mx0 + mx1) / 2;
        let y2 = model_dy + mrow * (CH_H + ROW_GAP);
        let _ = writeln!(
            svg,
            "  <line x1=\"{x1}\" y1=\"{y1}\" x2=\"{x2}\" y2=\"{y2}\" stroke=\"{COLOR_SYNC}\" \
             stroke-width=\"1\" stroke-dasharray=\"4 3\" stroke-opacity=\"0.8\"/>"
        );
    }
    render_strip(&mut svg, &log_strip, margin, margin);
    render_strip(&mut svg, &model_strip, margin, model_dy);
    svg.push_str("</svg>\n");
    svg
}

/// DOT rendering of an alignment order: nodes clustered by origin side,
/// edges colored by their dependency tag.
pub fn order_to_dot(order: &crate::aligner::AlignmentOrder) -> String {
    let mut s = String::from(
        "digraph alignment_order {\n  rankdir=LR;\n  node [shape=box, style=filled, fontcolor=white];\n",
    );
    let cluster = |kind: NodeKind| match kind {
        NodeKind::Log => 0,
        NodeKind::Sync => 1,
        NodeKind::Model | NodeKind::Invisible => 2,
    };
    for (name, id) in [("log_moves", 0), ("sync_moves", 1), ("model_moves", 2)] {
        let members: Vec<usize> = order
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| cluster(n.kind) == id)
            .map(|(i, _)| i)
            .collect();
        if members.is_empty() {
            continue;
        }
        let _ = writeln!(s, "  subgraph cluster_{name} {{\n    label=\"{name}\";");
        for i in members {
            let n = &order.nodes[i];
            let color = match n.kind {
                NodeKind::Sync => COLOR_SYNC,
                NodeKind::Log => COLOR_LOG,
                NodeKind::Model => COLOR_MODEL,
                NodeKind::Invisible => COLOR_TAU,
            };
            let _ = writeln!(
                s,
                "    n{i} [label=\"({},{})\", fillcolor=\"{color}\"];",
                n.log_part.display(),
                n.model_part.display()
            );
        }
        s.push_str("  }\n");
    }
    for (&(u, v), tags) in &order.edges {
        let color = match (tags.log, tags.model) {
            (true, true) => COLOR_SYNC,
            (true, false) => COLOR_LOG,
            _ => COLOR_MODEL,
        };
        let _ = writeln!(s, "  n{u} -> n{v} [color=\"{color}\"];");
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aligner::{decompose, run_to_alignment_order};
    use crate::fixtures;
    use crate::product::{extended_product, CostModel};
    use crate::unfold::{unfold, UnfoldOptions};
    use crate::Rational;

    #[test]
    fn chain_partitions_to_sequence() {
        let l = partition(3, &[(0, 1), (1, 2)]);
        assert_eq!(
            l.root,
            Block::Sequence(vec![Block::Leaf(0), Block::Leaf(1), Block::Leaf(2)])
        );
    }

    #[test]
    fn antichain_partitions_to_parallel() {
        let l = partition(2, &[]);
        assert_eq!(
            l.root,
            Block::Parallel(vec![Block::Leaf(0), Block::Leaf(1)])
        );
    }

    #[test]
    fn mixed_trace_partitions_like_a_chevron_view() {
        // a before b before {c ∥ d}: a sequence ending in a parallel block.
        let l = partition(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]);
        match l.root {
            Block::Sequence(children) => {
                assert_eq!(children[0], Block::Leaf(0));
                assert_eq!(children[1], Block::Leaf(1));
                assert_eq!(
                    children[2],
                    Block::Parallel(vec![Block::Leaf(2), Block::Leaf(3)])
                );
            }
            other => panic!("expected sequence, got {other:?}"),
        }
    }

    #[test]
    fn n_shape_falls_back_to_residual() {
        // a→c, b→c, b→d: neither a clean sequential nor parallel cut.
        let l = partition(4, &[(0, 2), (1, 2), (1, 3)]);
        assert!(matches!(l.root, Block::Residual { .. }));
    }

    #[test]
    fn layout_soundness_sequences_do_not_overlap() {
        fn leaves(block: &Block) -> Vec<u32> {
            match block {
                Block::Leaf(v) => vec![*v],
                Block::Sequence(c) | Block::Parallel(c) => c.iter().flat_map(leaves).collect(),
                Block::Residual { nodes, .. } => nodes.clone(),
            }
        }
        fn check_block(block: &Block, geo: &Geometry) {
            if let Block::Sequence(children) = block {
                for w in children.windows(2) {
                    let max_left = leaves(&w[0]).iter().map(|&v| geo.spans[v as usize].1).max();
                    let min_right = leaves(&w[1]).iter().map(|&v| geo.spans[v as usize].0).min();
                    assert!(max_left <= min_right, "sequence children overlap");
                }
            }
            match block {
                Block::Sequence(c) | Block::Parallel(c) => {
                    c.iter().for_each(|b| check_block(b, geo))
                }
                _ => {}
            }
        }
        for f in fixtures::corpus() {
            let dag = f.trace.to_dag();
            let labels: Vec<String> = dag.labels.clone();
            let part = partition(labels.len(), &dag.edges);
            let geo = layout(&part, &labels);
            check_block(&part.root, &geo);
            for &(x0, x1, _) in &geo.spans {
                assert!(x1 > x0, "every node needs positive extent");
            }
        }
    }

    fn fig6_svg() -> String {
        let (model, trace) = fixtures::fig5_instance();
        let spn = extended_product(&trace, &model);
        let cm = CostModel::<Rational>::default();
        let out = unfold(&spn, &cm, &UnfoldOptions::default()).unwrap();
        let ua = decompose(&run_to_alignment_order(&out.runs[0]), &cm);
        render_svg(&ua)
    }

    #[test]
    fn svg_is_deterministic_and_complete() {
        let a = fig6_svg();
        let b = fig6_svg();
        assert_eq!(a, b, "same input must give byte-identical SVG");
        // 4 log chevrons + 4 model chevrons; stripes on the two log-only
        // moves; 2 φ connectors.
        assert_eq!(a.matches("stroke=\"#263238\"").count(), 8);
        assert_eq!(a.matches("url(#hatch)").count(), 2);
        assert_eq!(a.matches("stroke-dasharray").count(), 2);
        assert!(a.starts_with("<svg ") && a.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn empty_alignment_renders_valid_svg() {
        let ua: UAlignment<Rational> = UAlignment {
            log_side: crate::aligner::SideGraph {
                labels: vec![],
                edges: vec![],
                origin: vec![],
            },
            model_side: crate::aligner::SideGraph {
                labels: vec![],
                edges: vec![],
                origin: vec![],
            },
            phi: vec![],
            cost: num_traits::Zero::zero(),
        };
        let svg = render_svg(&ua);
        assert!(svg.starts_with("<svg "));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn dot_covers_every_node_once() {
        let (model, trace) = fixtures::fig5_instance();
        let spn = extended_product(&trace, &model);
        let cm = CostModel::<Rational>::default();
        let out = unfold(&spn, &cm, &UnfoldOptions::default()).unwrap();
        let order = run_to_alignment_order(&out.runs[0]);
        let dot = order_to_dot(&order);
        for i in 0..order.n_nodes() {
            assert_eq!(dot.matches(&format!("n{i} [label=")).count(), 1);
        }
        assert!(dot.contains("cluster_log_moves"));
        assert!(dot.contains("cluster_sync_moves"));
        assert!(dot.contains("cluster_model_moves"));
    }
}
