//! JSON result files, a hashed run manifest, and static HTML figures.
//!
//! The HTML pages are generated only from the JSON files in the output
//! directory, with inline SVG and no external resources.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coherence::{CoherenceReport, SweepResult};
use crate::dynamics::TopicTimeMatrix;
use crate::error::{Error, IoContext, Result};
use crate::hierarchy::{Dendrogram, TopicMap2D};
use crate::topicrep::TopicJson;

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

/// (section, file name, bundled schema)
pub const SECTIONS: [(&str, &str, &str); 6] = [
    ("topics", "topics.json", include_str!("../assets/schemas/topics.v1.json")),
    ("coherence", "coherence.json", include_str!("../assets/schemas/coherence.v1.json")),
    ("sweep", "sweep.json", include_str!("../assets/schemas/sweep.v1.json")),
    ("dynamics", "dynamics.json", include_str!("../assets/schemas/dynamics.v1.json")),
    ("dendrogram", "dendrogram.json", include_str!("../assets/schemas/dendrogram.v1.json")),
    ("map2d", "map2d.json", include_str!("../assets/schemas/map2d.v1.json")),
];

pub const MANIFEST_SCHEMA: &str = include_str!("../assets/schemas/manifest.v1.json");

/// Bundled schema text for a section or `"manifest"`.
pub fn schema(section: &str) -> Option<&'static str> {
    if section == "manifest" {
        return Some(MANIFEST_SCHEMA);
    }
    SECTIONS.iter().find(|s| s.0 == section).map(|s| s.2)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunArtifacts {
    pub topics: Option<Vec<TopicJson>>,
    pub coherence: Option<CoherenceReport>,
    pub sweep: Option<SweepResult>,
    pub dynamics: Option<TopicTimeMatrix>,
    pub dendrogram: Option<Dendrogram>,
    pub map2d: Option<TopicMap2D>,
}

fn to_json<T: Serialize>(value: &T, name: &str) -> Result<Vec<u8>> {
    let mut raw = serde_json::to_vec_pretty(value).map_err(|e| Error::json(name, e))?;
    raw.push(b'\n');
    Ok(raw)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let raw = std::fs::read(path).at(path)?;
    serde_json::from_slice(&raw).map_err(|e| Error::json(path, e))
}

fn read_optional<T: DeserializeOwned>(path: &Path) -> Result<Option<T>> {
    if path.exists() {
        read_json(path).map(Some)
    } else {
        Ok(None)
    }
}

impl RunArtifacts {
    /// Loads whichever section files exist in `dir`.
    pub fn load(dir: &Path) -> Result<Self> {
        Ok(Self {
            topics: read_optional(&dir.join("topics.json"))?,
            coherence: read_optional(&dir.join("coherence.json"))?,
            sweep: read_optional(&dir.join("sweep.json"))?,
            dynamics: read_optional(&dir.join("dynamics.json"))?,
            dendrogram: read_optional(&dir.join("dendrogram.json"))?,
            map2d: read_optional(&dir.join("map2d.json"))?,
        })
    }

    /// Serialized bytes per section, in `SECTIONS` order.
    fn serialized(&self) -> Result<Vec<Option<Vec<u8>>>> {
        fn opt<T: Serialize>(v: &Option<T>, name: &str) -> Result<Option<Vec<u8>>> {
            v.as_ref().map(|v| to_json(v, name)).transpose()
        }
        Ok(vec![
            opt(&self.topics, "topics")?,
            opt(&self.coherence, "coherence")?,
            opt(&self.sweep, "sweep")?,
            opt(&self.dynamics, "dynamics")?,
            opt(&self.dendrogram, "dendrogram")?,
            opt(&self.map2d, "map2d")?,
        ])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
    /// Schema id, e.g. `topics.v1`; none for HTML pages.
    pub schema: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportManifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub files: Vec<ManifestEntry>,
    /// Sections with no artifact in this run.
    pub absent: Vec<String>,
}

impl ReportManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        read_json(&dir.join(MANIFEST_FILE))
    }

    fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, to_json(self, MANIFEST_FILE)?).at(&path)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the canonical (sorted-key, compact) JSON form of a config.
pub fn config_hash(config: &serde_json::Value) -> String {
    sha256_hex(config.to_string().as_bytes())
}

fn entry(file: &str, bytes: &[u8], schema: Option<String>) -> ManifestEntry {
    ManifestEntry {
        file: file.to_string(),
        bytes: bytes.len() as u64,
        sha256: sha256_hex(bytes),
        schema,
    }
}

/// Writes every present section plus the manifest. Output bytes depend only
/// on the artifacts and the config.
pub fn emit_json(
    artifacts: &RunArtifacts,
    config: &serde_json::Value,
    seed: Option<u64>,
    out_dir: &Path,
) -> Result<ReportManifest> {
    let sections = artifacts.serialized()?;
    if sections.iter().all(Option::is_none) {
        return Err(Error::invalid("no artifacts to report"));
    }
    std::fs::create_dir_all(out_dir).at(out_dir)?;
    let mut files = Vec::new();
    let mut absent = Vec::new();
    for ((name, file, _), bytes) in SECTIONS.iter().zip(sections) {
        match bytes {
            Some(bytes) => {
                let path = out_dir.join(file);
                std::fs::write(&path, &bytes).at(&path)?;
                files.push(entry(file, &bytes, Some(format!("{name}.v{SCHEMA_VERSION}"))));
            }
            None => absent.push(name.to_string()),
        }
    }
    let manifest = ReportManifest {
        schema_version: SCHEMA_VERSION,
        config_hash: config_hash(config),
        seed,
        files,
        absent,
    };
    manifest.save(out_dir)?;
    Ok(manifest)
}

// ---------------------------------------------------------------------------
// HTML

const PALETTE: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
];

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

fn page(title: &str, body: &str) -> String {
    format!(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{t}</title>\n<style>\n\
         body{{font-family:sans-serif;margin:2em;color:#222}}\n\
         table{{border-collapse:collapse;margin:0.5em 1em 1em 0;display:inline-table;vertical-align:top}}\n\
         td,th{{border:1px solid #ccc;padding:2px 8px;text-align:left}}\n\
         svg text{{font-size:11px}}\n\
         </style>\n</head>\n<body>\n<p><a href=\"index.html\">index</a></p>\n<h1>{t}</h1>\n{body}</body>\n</html>\n",
        t = esc(title),
    )
}

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn topics_page(topics: &[TopicJson]) -> String {
    let mut body = String::new();
    for t in topics {
        let _ = write!(
            body,
            "<table>\n<tr><th colspan=\"2\">Topic {} ({} docs)</th></tr>\n",
            t.topic_id, t.size
        );
        for (term, w) in &t.terms {
            let _ = writeln!(body, "<tr><td>{}</td><td>{:.4}</td></tr>", esc(term), w);
        }
        body.push_str("</table>\n");
    }
    page("Topic keywords", &body)
}

struct Frame {
    w: f64,
    h: f64,
    pad: f64,
}

impl Frame {
    fn x(&self, t: f64) -> f64 {
        self.pad + t * (self.w - 2.0 * self.pad)
    }

    fn y(&self, t: f64) -> f64 {
        self.h - self.pad - t * (self.h - 2.0 * self.pad)
    }

    fn open(&self) -> String {
        format!(
            "<svg width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" role=\"img\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
            self.w, self.h, self.w, self.h
        )
    }
}

fn unit(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.5
    }
}

fn coherence_page(sweep: Option<&SweepResult>, coherence: Option<&CoherenceReport>) -> String {
    let mut body = String::new();
    if let Some(s) = sweep {
        let pts: Vec<(usize, f64)> = s.table.iter().filter_map(|e| e.score.map(|v| (e.k, v))).collect();
        body.push_str("<h2>Coherence by topic count</h2>\n");
        if pts.is_empty() {
            body.push_str("<p>No successful runs.</p>\n");
        } else {
            let f = Frame { w: 640.0, h: 360.0, pad: 40.0 };
            let (kmin, kmax) = (pts[0].0 as f64, pts[pts.len() - 1].0 as f64);
            let lo = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
            let (lo, hi) = (lo - 0.05 * (hi - lo).max(0.01), hi + 0.05 * (hi - lo).max(0.01));
            let xy = |k: usize, v: f64| (f.x(unit(k as f64, kmin, kmax)), f.y(unit(v, lo, hi)));
            let mut svg = f.open();
            let line: Vec<String> = pts.iter().map(|&(k, v)| {
                let (x, y) = xy(k, v);
                format!("{x:.1},{y:.1}")
            }).collect();
            let _ = writeln!(svg, "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>", color(0), line.join(" "));
            for &(k, v) in &pts {
                let (x, y) = xy(k, v);
                let marked = s.argmax == Some(k);
                let _ = writeln!(
                    svg,
                    "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"{}\" fill=\"{}\"/>\n<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{k}</text>",
                    if marked { 6 } else { 3 },
                    if marked { color(2) } else { color(0) },
                    f.h - f.pad + 16.0,
                );
                if marked {
                    let _ = writeln!(svg, "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">best k = {k} ({v:.3})</text>", y - 10.0);
                }
            }
            let _ = writeln!(svg, "<text x=\"{:.1}\" y=\"{:.1}\">C_V {hi:.3}</text>", 4.0, f.pad - 4.0);
            let _ = writeln!(svg, "<text x=\"{:.1}\" y=\"{:.1}\">C_V {lo:.3}</text>", 4.0, f.h - f.pad + 30.0);
            svg.push_str("</svg>\n");
            body.push_str(&svg);
        }
        body.push_str("<table>\n<tr><th>k</th><th>C_V</th></tr>\n");
        for e in &s.table {
            let v = e.score.map_or_else(|| format!("failed: {}", esc(e.error.as_deref().unwrap_or(""))), |v| format!("{v:.4}"));
            let _ = writeln!(body, "<tr><td>{}</td><td>{v}</td></tr>", e.k);
        }
        body.push_str("</table>\n");
    }
    if let Some(c) = coherence {
        let _ = writeln!(body, "<h2>Per-topic coherence (mean {:.4})</h2>", c.mean);
        let f = Frame { w: 640.0, h: 24.0 + 18.0 * c.per_topic.len() as f64, pad: 12.0 };
        let mut svg = f.open();
        for (i, t) in c.per_topic.iter().enumerate() {
            let y = f.pad + 18.0 * i as f64;
            let w = (t.score.max(0.0)) * (f.w - 160.0);
            let _ = writeln!(
                svg,
                "<text x=\"4\" y=\"{:.1}\">topic {}</text>\n<rect x=\"80\" y=\"{y:.1}\" width=\"{w:.1}\" height=\"14\" fill=\"{}\"/>\n<text x=\"{:.1}\" y=\"{:.1}\">{:.3}</text>",
                y + 11.0,
                t.topic_id,
                color(t.topic_id as usize),
                84.0 + w,
                y + 11.0,
                t.score
            );
        }
        svg.push_str("</svg>\n");
        body.push_str(&svg);
        if !c.excluded.is_empty() {
            let ids: Vec<String> = c.excluded.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(body, "<p>Excluded topics: {}</p>", ids.join(", "));
        }
    }
    page("Topic coherence", &body)
}

fn dynamics_page(d: &TopicTimeMatrix) -> String {
    let f = Frame { w: 760.0, h: 400.0, pad: 40.0 };
    let n = d.buckets.len();
    let xs: Vec<f64> = (0..n)
        .map(|i| f.x(if n > 1 { i as f64 / (n - 1) as f64 } else { 0.5 }))
        .collect();
    let mut svg = f.open();
    let mut lower = vec![0.0f64; n];
    for (t, topic) in d.topics.iter().enumerate() {
        let upper: Vec<f64> = (0..n).map(|b| lower[b] + d.shares[b].get(t).copied().unwrap_or(0.0)).collect();
        let mut pts: Vec<String> = (0..n).map(|b| format!("{:.1},{:.1}", xs[b], f.y(upper[b]))).collect();
        pts.extend((0..n).rev().map(|b| format!("{:.1},{:.1}", xs[b], f.y(lower[b]))));
        if n == 1 {
            let (l, r) = (f.x(0.0), f.x(1.0));
            pts = vec![
                format!("{l:.1},{:.1}", f.y(upper[0])),
                format!("{r:.1},{:.1}", f.y(upper[0])),
                format!("{r:.1},{:.1}", f.y(lower[0])),
                format!("{l:.1},{:.1}", f.y(lower[0])),
            ];
        }
        let _ = writeln!(
            svg,
            "<polygon fill=\"{}\" stroke=\"white\" stroke-width=\"0.5\" points=\"{}\"><title>topic {topic}</title></polygon>",
            color(t),
            pts.join(" ")
        );
        lower = upper;
    }
    let step = (n / 12).max(1);
    for b in (0..n).step_by(step) {
        let _ = writeln!(svg, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>", xs[b], f.h - f.pad + 16.0, esc(&d.buckets[b]));
    }
    svg.push_str("</svg>\n");
    let mut legend = String::from("<p>");
    for (t, topic) in d.topics.iter().enumerate() {
        let _ = write!(legend, "<span style=\"color:{}\">&#9632;</span> topic {topic} &nbsp; ", color(t));
    }
    legend.push_str("</p>\n");
    page("Topic dynamics", &(svg + &legend))
}

fn map_page(m: &TopicMap2D) -> String {
    let f = Frame { w: 640.0, h: 640.0, pad: 60.0 };
    let (xlo, xhi) = m.topics.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.x), a.1.max(p.x)));
    let (ylo, yhi) = m.topics.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.y), a.1.max(p.y)));
    let max_size = m.topics.iter().map(|p| p.size).max().unwrap_or(1).max(1) as f64;
    let mut svg = f.open();
    let _ = writeln!(
        svg,
        "<line x1=\"{0:.1}\" y1=\"{1:.1}\" x2=\"{2:.1}\" y2=\"{1:.1}\" stroke=\"#ccc\"/>\n<line x1=\"{3:.1}\" y1=\"{4:.1}\" x2=\"{3:.1}\" y2=\"{5:.1}\" stroke=\"#ccc\"/>",
        f.x(0.0),
        f.y(0.5),
        f.x(1.0),
        f.x(0.5),
        f.y(0.0),
        f.y(1.0)
    );
    for p in &m.topics {
        let (x, y) = (f.x(unit(p.x, xlo, xhi)), f.y(unit(p.y, ylo, yhi)));
        // area proportional to size
        let r = 4.0 + 36.0 * (p.size as f64 / max_size).sqrt();
        let _ = writeln!(
            svg,
            "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"{r:.1}\" fill=\"{}\" fill-opacity=\"0.5\" stroke=\"#555\"><title>topic {}: {} ({} docs)</title></circle>\n<text x=\"{x:.1}\" y=\"{y:.1}\" text-anchor=\"middle\">{}</text>",
            color(p.topic_id as usize),
            p.topic_id,
            esc(&p.label),
            p.size,
            p.topic_id
        );
    }
    svg.push_str("</svg>\n");
    let mut table = String::from("<table>\n<tr><th>topic</th><th>size</th><th>terms</th></tr>\n");
    for p in &m.topics {
        let _ = writeln!(table, "<tr><td>{}</td><td>{}</td><td>{}</td></tr>", p.topic_id, p.size, esc(&p.label));
    }
    table.push_str("</table>\n");
    page("Inter-topic distance map", &(svg + &table))
}

fn dendrogram_page(d: &Dendrogram, topics: Option<&[TopicJson]>) -> String {
    let k = d.leaves.len();
    let label = |leaf: usize| {
        let id = d.leaves[leaf];
        let terms = topics
            .and_then(|ts| ts.iter().find(|t| t.topic_id == id))
            .map(|t| t.terms.iter().take(3).map(|x| x.0.as_str()).collect::<Vec<_>>().join(", "))
            .unwrap_or_default();
        format!("{id} {terms}")
    };
    // leaf order from a depth-first walk of the tree
    let mut children = vec![None; 2 * k.max(1) - 1];
    for m in &d.merges {
        if m.node < children.len() {
            children[m.node] = Some((m.left, m.right));
        }
    }
    let mut order = Vec::with_capacity(k);
    let mut stack: Vec<usize> = d.merges.last().map_or_else(|| (0..k).rev().collect(), |m| vec![m.node]);
    while let Some(n) = stack.pop() {
        match children.get(n).copied().flatten() {
            Some((l, r)) => {
                stack.push(r);
                stack.push(l);
            }
            None => order.push(n),
        }
    }
    let row = 20.0;
    let f = Frame { w: 760.0, h: 40.0 + row * k as f64, pad: 20.0 };
    let max_h = d.merges.iter().map(|m| m.height).fold(0.0f64, f64::max).max(1e-12);
    let left = 260.0;
    let hx = |h: f64| left + (h / max_h) * (f.w - left - f.pad);
    let mut pos = vec![(0.0f64, 0.0f64); 2 * k.max(1) - 1];
    for (i, &leaf) in order.iter().enumerate() {
        pos[leaf] = (left, f.pad + row * i as f64 + row / 2.0);
    }
    let mut svg = f.open();
    for (i, &leaf) in order.iter().enumerate() {
        let _ = writeln!(svg, "<text x=\"4\" y=\"{:.1}\">{}</text>", f.pad + row * i as f64 + row / 2.0 + 4.0, esc(&label(leaf)));
    }
    for m in &d.merges {
        let (a, b) = (pos[m.left], pos[m.right]);
        let x = hx(m.height);
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"#444\" points=\"{:.1},{:.1} {x:.1},{:.1} {x:.1},{:.1} {:.1},{:.1}\"/>",
            a.0, a.1, a.1, b.1, b.0, b.1
        );
        pos[m.node] = (x, (a.1 + b.1) / 2.0);
    }
    let _ = writeln!(svg, "<text x=\"{:.1}\" y=\"{:.1}\">distance 0</text>", left, f.h - 4.0);
    let _ = writeln!(svg, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{max_h:.3}</text>", f.w - f.pad, f.h - 4.0);
    svg.push_str("</svg>\n");
    page("Topic hierarchy", &svg)
}

fn index_page(manifest: &ReportManifest, pages: &[(&str, &str)]) -> String {
    let mut body = String::from("<h2>Figures</h2>\n<ul>\n");
    for (file, title) in pages {
        let _ = writeln!(body, "<li><a href=\"{file}\">{}</a></li>", esc(title));
    }
    body.push_str("</ul>\n<h2>Data files</h2>\n<table>\n<tr><th>file</th><th>bytes</th><th>sha256</th></tr>\n");
    for e in manifest.files.iter().filter(|e| e.schema.is_some()) {
        let _ = writeln!(
            body,
            "<tr><td><a href=\"{0}\">{0}</a></td><td>{1}</td><td><code>{2}</code></td></tr>",
            esc(&e.file),
            e.bytes,
            e.sha256
        );
    }
    body.push_str("</table>\n");
    if !manifest.absent.is_empty() {
        let _ = writeln!(body, "<p>Absent sections: {}</p>", esc(&manifest.absent.join(", ")));
    }
    let _ = writeln!(body, "<p>Config hash <code>{}</code></p>", manifest.config_hash);
    page("Topic modelling report", &body)
}

/// Renders the figure pages from the JSON in `out_dir`, then adds them to
/// the manifest. Returns the written paths.
pub fn emit_html(out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut manifest = ReportManifest::load(out_dir)?;
    manifest.files.retain(|e| e.schema.is_some());
    let a = RunArtifacts::load(out_dir)?;
    let mut pages: Vec<(&str, &str, String)> = Vec::new();
    if let Some(t) = &a.topics {
        pages.push(("topics.html", "Topic keywords", topics_page(t)));
    }
    if a.sweep.is_some() || a.coherence.is_some() {
        pages.push(("coherence.html", "Topic coherence", coherence_page(a.sweep.as_ref(), a.coherence.as_ref())));
    }
    if let Some(d) = &a.dynamics {
        pages.push(("dynamics.html", "Topic dynamics", dynamics_page(d)));
    }
    if let Some(m) = &a.map2d {
        pages.push(("map.html", "Inter-topic distance map", map_page(m)));
    }
    if let Some(d) = &a.dendrogram {
        pages.push(("dendrogram.html", "Topic hierarchy", dendrogram_page(d, a.topics.as_deref())));
    }
    let links: Vec<(&str, &str)> = pages.iter().map(|p| (p.0, p.1)).collect();
    let index = index_page(&manifest, &links);
    pages.push(("index.html", "index", index));

    let mut written = Vec::new();
    for (file, _, html) in &pages {
        let path = out_dir.join(file);
        std::fs::write(&path, html).at(&path)?;
        manifest.files.push(entry(file, html.as_bytes(), None));
        written.push(path);
    }
    manifest.save(out_dir)?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherence::{SweepEntry, TopicCoherence};
    use crate::hierarchy::{Merge, MapPoint};

    fn sample() -> RunArtifacts {
        RunArtifacts {
            topics: Some(vec![TopicJson {
                topic_id: 0,
                size: 3,
                terms: vec![("#ai".into(), 0.5), ("a<b".into(), 0.25)],
            }]),
            coherence: Some(CoherenceReport {
                per_topic: vec![TopicCoherence { topic_id: 0, score: 0.6 }],
                mean: 0.6,
                excluded: vec![],
            }),
            sweep: Some(SweepResult {
                table: [(5, 0.4), (15, 0.52), (25, 0.45)]
                    .iter()
                    .map(|&(k, s)| SweepEntry { k, score: Some(s), error: None })
                    .collect(),
                argmax: Some(15),
            }),
            dynamics: Some(TopicTimeMatrix {
                buckets: vec!["2021-01-01".into(), "2021-02-01".into()],
                topics: vec![0],
                shares: vec![vec![1.0], vec![1.0]],
            }),
            dendrogram: Some(Dendrogram {
                leaves: vec![0, 1],
                merges: vec![Merge { left: 0, right: 1, height: 0.3, node: 2 }],
            }),
            map2d: Some(TopicMap2D {
                topics: vec![
                    MapPoint { topic_id: 0, x: 0.1, y: 0.0, size: 3, label: "a".into() },
                    MapPoint { topic_id: 1, x: -0.1, y: 0.0, size: 1, label: "b".into() },
                ],
            }),
        }
    }

    #[test]
    fn identical_runs_are_byte_identical() {
        let cfg = serde_json::json!({"k": 5, "seed": 42});
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        emit_json(&sample(), &cfg, Some(42), a.path()).unwrap();
        emit_json(&sample(), &cfg, Some(42), b.path()).unwrap();
        emit_html(a.path()).unwrap();
        emit_html(b.path()).unwrap();
        for f in ["topics.json", "manifest.json", "index.html", "dendrogram.html"] {
            assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
        }
    }

    #[test]
    fn manifest_flags_absent_and_hashes_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut art = sample();
        art.dendrogram = None;
        let m = emit_json(&art, &serde_json::json!({}), None, dir.path()).unwrap();
        assert_eq!(m.absent, vec!["dendrogram"]);
        for e in &m.files {
            let bytes = std::fs::read(dir.path().join(&e.file)).unwrap();
            assert_eq!(e.bytes, bytes.len() as u64);
            assert_eq!(e.sha256, sha256_hex(&bytes));
        }
        assert!(emit_json(&RunArtifacts::default(), &serde_json::json!({}), None, dir.path()).is_err());
    }

    #[test]
    fn html_is_self_contained_and_marks_argmax() {
        let dir = tempfile::tempdir().unwrap();
        emit_json(&sample(), &serde_json::json!({}), None, dir.path()).unwrap();
        let pages = emit_html(dir.path()).unwrap();
        assert_eq!(pages.len(), 6);
        for p in &pages {
            let html = std::fs::read_to_string(p).unwrap();
            assert!(!html.contains("http:") && !html.contains("https:") && !html.contains("src="));
        }
        let coh = std::fs::read_to_string(dir.path().join("coherence.html")).unwrap();
        assert!(coh.contains("best k = 15"));
        let topics = std::fs::read_to_string(dir.path().join("topics.html")).unwrap();
        assert!(topics.contains("a&lt;b"));
        let m = ReportManifest::load(dir.path()).unwrap();
        assert!(m.files.iter().any(|e| e.file == "index.html"));
    }

    #[test]
    fn malformed_artifact_names_file() {
        let dir = tempfile::tempdir().unwrap();
        emit_json(&sample(), &serde_json::json!({}), None, dir.path()).unwrap();
        std::fs::write(dir.path().join("map2d.json"), "{not json").unwrap();
        let err = emit_html(dir.path()).unwrap_err().to_string();
        assert!(err.contains("map2d.json"));
    }
}
