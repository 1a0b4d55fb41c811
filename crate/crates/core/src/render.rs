//! DOT and SVG output for spatio-semantic graphs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::graph::SpatioSemanticGraph;
use crate::lexicon::CiuId;
use crate::spatial::{Point, IMAGE_HEIGHT, IMAGE_WIDTH};

const NODE_RADIUS: f64 = 9.0;

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz DOT with pinned positions (`pos="x,y!"`, y negated) and edges
/// labelled by their 1-based order in the walk. Nodes are sorted by CIU id.
pub fn to_dot(graph: &SpatioSemanticGraph) -> String {
    let mut out = String::from("digraph spatio_semantic {\n");
    if !graph.is_empty() {
        out.push_str("  node [shape=circle, fontsize=10];\n");
    }
    for node in graph.nodes() {
        let _ = writeln!(
            out,
            "  {} [label=\"{}\", tooltip=\"{}\", pos=\"{},{}!\"];",
            node.id.value(),
            dot_escape(node.id.short_name()),
            dot_escape(node.id.label()),
            num(node.x),
            num(-node.y),
        );
    }
    for (i, edge) in graph.edges().iter().enumerate() {
        let _ = writeln!(
            out,
            "  {} -> {} [label=\"{}\"];",
            edge.from.value(),
            edge.to.value(),
            i + 1
        );
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvgOptions {
    pub width: f64,
    pub height: f64,
    /// Draw quadrant gridlines through this point.
    pub grid: Option<Point>,
    /// Picture drawn underneath the graph, referenced by path.
    pub background: Option<String>,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions {
            width: IMAGE_WIDTH,
            height: IMAGE_HEIGHT,
            grid: None,
            background: None,
        }
    }
}

/// SVG 1.1 drawing of the walk: one `<g class="node">` per distinct CIU and
/// one `<g class="edge">` per edge.
pub fn render_svg(graph: &SpatioSemanticGraph, options: &SvgOptions) -> String {
    let (w, h) = (num(options.width), num(options.height));
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" xmlns:xlink=\"http://www.w3.org/1999/xlink\" \
         version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    out.push_str(
        "  <defs>\n    <marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"9\" refY=\"5\" \
         markerWidth=\"6\" markerHeight=\"6\" orient=\"auto\">\n      \
         <path d=\"M0,0 L10,5 L0,10 z\" fill=\"#c0392b\"/>\n    </marker>\n  </defs>\n",
    );
    if let Some(path) = &options.background {
        let _ = writeln!(
            out,
            "  <image x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" xlink:href=\"{}\"/>",
            xml_escape(path)
        );
    }
    let _ = writeln!(
        out,
        "  <rect class=\"frame\" x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"none\" stroke=\"#444\"/>"
    );
    if let Some(c) = options.grid {
        let _ = writeln!(
            out,
            "  <g class=\"grid\" stroke=\"#888\" stroke-dasharray=\"4 3\">\n    \
             <line x1=\"{cx}\" y1=\"0\" x2=\"{cx}\" y2=\"{h}\"/>\n    \
             <line x1=\"0\" y1=\"{cy}\" x2=\"{w}\" y2=\"{cy}\"/>\n  </g>",
            cx = num(c.x),
            cy = num(c.y),
        );
    }

    if !graph.edges().is_empty() {
        out.push_str("  <g class=\"edges\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\">\n");
        let mut seen: BTreeMap<(CiuId, CiuId), usize> = BTreeMap::new();
        for (i, edge) in graph.edges().iter().enumerate() {
            let k = seen.entry((edge.from, edge.to)).or_insert(0);
            let occurrence = *k;
            *k += 1;
            let a = graph.node(edge.from).expect("edge endpoint is a node").point();
            let b = graph.node(edge.to).expect("edge endpoint is a node").point();
            let (d, label_at) = if edge.from == edge.to {
                self_loop_path(a, occurrence)
            } else {
                curved_path(a, b, occurrence)
            };
            let _ = writeln!(
                out,
                "    <g class=\"edge\">\n      <title>{}: {} to {}</title>\n      \
                 <path d=\"{d}\" marker-end=\"url(#arrow)\"/>\n      \
                 <text x=\"{}\" y=\"{}\" font-size=\"8\" fill=\"#c0392b\" stroke=\"none\">{}</text>\n    </g>",
                i + 1,
                xml_escape(edge.from.label()),
                xml_escape(edge.to.label()),
                num(label_at.x),
                num(label_at.y),
                i + 1,
            );
        }
        out.push_str("  </g>\n");
    }

    if !graph.nodes().is_empty() {
        out.push_str("  <g class=\"nodes\">\n");
        for node in graph.nodes() {
            let _ = writeln!(
                out,
                "    <g class=\"node\">\n      <title>{}</title>\n      \
                 <circle cx=\"{x}\" cy=\"{y}\" r=\"{r}\" fill=\"#fdfefe\" stroke=\"#1f3a93\"/>\n      \
                 <text x=\"{x}\" y=\"{ty}\" font-size=\"9\" text-anchor=\"middle\">{}</text>\n    </g>",
                xml_escape(node.id.label()),
                xml_escape(node.id.short_name()),
                x = num(node.x),
                y = num(node.y),
                r = num(NODE_RADIUS),
                ty = num(node.y + NODE_RADIUS + 9.0),
            );
        }
        out.push_str("  </g>\n");
    }
    out.push_str("</svg>\n");
    out
}

/// Quadratic curve from `a` to `b`, bowed further for each repeat of the
/// same directed edge so parallel traversals stay distinguishable.
fn curved_path(a: Point, b: Point, occurrence: usize) -> (String, Point) {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len = dx.hypot(dy).max(f64::EPSILON);
    let (ux, uy) = (dx / len, dy / len);
    let (nx, ny) = (-uy, ux);
    let bow = 10.0 + 12.0 * occurrence as f64;
    let start = Point::new(a.x + ux * NODE_RADIUS, a.y + uy * NODE_RADIUS);
    let end = Point::new(b.x - ux * NODE_RADIUS, b.y - uy * NODE_RADIUS);
    let ctrl = Point::new((a.x + b.x) / 2.0 + nx * bow, (a.y + b.y) / 2.0 + ny * bow);
    let mid = Point::new(
        0.25 * start.x + 0.5 * ctrl.x + 0.25 * end.x,
        0.25 * start.y + 0.5 * ctrl.y + 0.25 * end.y,
    );
    let d = format!(
        "M{},{} Q{},{} {},{}",
        num(start.x),
        num(start.y),
        num(ctrl.x),
        num(ctrl.y),
        num(end.x),
        num(end.y)
    );
    (d, mid)
}

fn self_loop_path(p: Point, occurrence: usize) -> (String, Point) {
    let r = NODE_RADIUS;
    let reach = r * (3.0 + 1.5 * occurrence as f64);
    let d = format!(
        "M{},{} C{},{} {},{} {},{}",
        num(p.x - r * 0.6),
        num(p.y - r * 0.8),
        num(p.x - 2.0 * r),
        num(p.y - reach),
        num(p.x + 2.0 * r),
        num(p.y - reach),
        num(p.x + r * 0.6),
        num(p.y - r * 0.8),
    );
    (d, Point::new(p.x, p.y - reach * 0.8))
}
