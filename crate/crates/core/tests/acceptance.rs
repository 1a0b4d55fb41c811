//! One PASS/FAIL line per acceptance criterion, printed even under output capture.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::process::Command;
use std::time::Instant;

use ciugraph::features::{compute_features, Feature, FeatureVector};
use ciugraph::graph::{quadrant_graph_of, SpatioSemanticGraph};
use ciugraph::lexicon::{CiuId, Lexicon};
use ciugraph::render::{render_svg, to_dot, SvgOptions};
use ciugraph::spatial::CoordinateTable;
use ciugraph::stats::{ancova_feature, ancova_table, f_sf, t_quantile, CohortRecord, Group};
use ciugraph::synth::{generate_cohort, SynthSpec};
use ciugraph::Pipeline;
use common::*;
use graphviz_rust::dot_structures::{Graph, Stmt};
use rand::Rng;
use tempfile::TempDir;

fn report(n: u8, name: &str, outcome: Result<String, String>) {
    let line = match &outcome {
        Ok(detail) => format!("criterion {n} ({name}): PASS: {detail}"),
        Err(detail) => format!("criterion {n} ({name}): FAIL: {detail}"),
    };
    // straight to the process stdout so the line survives test capture
    let mut out = std::io::stdout();
    writeln!(out, "{line}").unwrap();
    out.flush().unwrap();
    if let Err(detail) = outcome {
        panic!("criterion {n} failed: {detail}");
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ciugraph"));
    cmd.env_remove("CIUGRAPH_CONFIG_DIR");
    cmd
}

fn run(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = bin().args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{args:?} exited {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out.stdout)
}

#[test]
fn criterion_1_golden_extraction() {
    let outcome = (|| {
        let input = fixture("reference.txt");
        let start = Instant::now();
        let stdout = run(&["extract", "--input", input.to_str().unwrap()])?;
        let elapsed = start.elapsed().as_secs_f64();
        let seq = ciugraph::lexicon::CiuSequence::from_json(&stdout).map_err(|e| e.to_string())?;
        let got: Vec<u8> = seq.ids().iter().map(|c| c.value()).collect();
        check(got == REFERENCE_SEQUENCE, || format!("sequence {got:?}"))?;
        check(elapsed < 1.0, || format!("took {elapsed:.3} s"))?;
        Ok(format!("21-element sequence reproduced in {:.0} ms", elapsed * 1000.0))
    })();
    report(1, "golden extraction", outcome);
}

#[test]
fn criterion_2_lexicon_fidelity() {
    let outcome = (|| {
        #[derive(serde::Deserialize)]
        struct Table {
            rows: Vec<Row>,
        }
        #[derive(serde::Deserialize)]
        struct Row {
            id: i64,
            words: Vec<String>,
        }
        let text = fs::read_to_string(fixture("dictionary.json")).map_err(|e| e.to_string())?;
        let table: Table = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        let id = |v: i64| CiuId::new(v).unwrap();
        let reference: BTreeSet<(String, CiuId)> = table
            .rows
            .iter()
            .flat_map(|r| r.words.iter().map(move |w| (w.clone(), id(r.id))))
            .collect();
        let lexicon = Lexicon::default();
        let shipped = lexicon.word_pairs();
        let added: BTreeSet<_> = shipped.difference(&reference).cloned().collect();
        let removed: BTreeSet<_> = reference.difference(&shipped).cloned().collect();
        check(added == BTreeSet::from([("get".to_string(), id(17))]), || {
            format!("added {added:?}")
        })?;
        check(removed == BTreeSet::from([("dish".to_string(), id(10))]), || {
            format!("removed {removed:?}")
        })?;
        let entries = lexicon.entries();
        check(entries["dish"] == [id(15)], || format!("dish -> {:?}", entries["dish"]))?;
        check(entries["kid"] == [id(1), id(2)], || "kid order".into())?;
        check(entries["child"] == [id(1), id(2)], || "child order".into())?;
        check(entries["notice"] == [id(23), id(22)], || "notice order".into())?;
        let noted: BTreeSet<&str> = lexicon.notes().iter().map(|n| n.word.as_str()).collect();
        for word in ["get", "dish", "kid", "child", "notice"] {
            check(noted.contains(word), || format!("{word} delta undocumented"))?;
        }
        Ok(format!(
            "{} reference pairs, deltas exactly +get->17, dish->15 only, kid/child/notice orders",
            reference.len()
        ))
    })();
    report(2, "lexicon fidelity", outcome);
}

fn features(seq: &[CiuId], table: &CoordinateTable) -> FeatureVector {
    let g = SpatioSemanticGraph::from_ids("t", seq, table).unwrap();
    compute_features(&g, &quadrant_graph_of(&g, table).unwrap()).unwrap()
}

fn oracle_value(o: &OracleFeatures, f: Feature) -> Option<f64> {
    match f {
        Feature::AvgX => o.avg_x,
        Feature::StdX => o.std_x,
        Feature::AvgY => o.avg_y,
        Feature::StdY => o.std_y,
        Feature::TotalPath => o.total_path,
        Feature::UniqueNodes => o.unique_nodes,
        Feature::PathPerUnique => o.path_per_unique,
        Feature::Nodes => Some(o.nodes),
        Feature::SelfCycles => o.self_cycles,
        Feature::Cycles => o.cycles,
        Feature::SelfCyclesQuad => o.self_cycles_quad,
        Feature::CrossRatioQuad => o.cross_ratio_quad,
    }
}

#[test]
fn criterion_3_feature_oracle() {
    let outcome = (|| {
        let mut r = rng(31337);
        let counts = [
            Feature::Nodes,
            Feature::UniqueNodes,
            Feature::Cycles,
            Feature::SelfCycles,
            Feature::SelfCyclesQuad,
        ];
        let spatial = [
            Feature::AvgX,
            Feature::StdX,
            Feature::AvgY,
            Feature::StdY,
            Feature::TotalPath,
            Feature::PathPerUnique,
        ];
        let mut max_len = 0;
        for case in 0..1000 {
            let table = random_table(&mut r);
            let seq = random_sequence(&mut r, 60);
            max_len = max_len.max(seq.len());
            let fv = features(&seq, &table);
            let oracle = oracle_features(&seq, &table);
            for f in Feature::COLUMNS {
                let (got, want) = (fv.get(f), oracle_value(&oracle, f));
                check(opt_close(got, want, 1e-9), || {
                    format!("case {case} {f}: {got:?} vs oracle {want:?}")
                })?;
            }
            if let (Some(u), Some(c), Some(s), Some(sq)) =
                (fv.unique_nodes, fv.cycles, fv.self_cycles, fv.self_cycles_quad)
            {
                check(c == fv.nodes - u && s <= c && sq >= s, || {
                    format!("case {case}: count invariants")
                })?;
            } else {
                check(seq.is_empty() && fv.is_empty(), || {
                    format!("case {case}: nulls on non-empty sequence")
                })?;
            }

            let c = r.random_range(0.1..10.0);
            let scaled = features(&seq, &table.scaled(c).unwrap());
            let tol = (table.width() + table.height()) * c * 1e-9 * (1.0 + seq.len() as f64);
            for f in spatial {
                let ok = match (fv.get(f), scaled.get(f)) {
                    (Some(a), Some(b)) => (a * c - b).abs() <= tol,
                    (a, b) => a == b,
                };
                check(ok, || format!("case {case}: {f} does not scale by {c}"))?;
            }
            let mut rev = seq.clone();
            rev.reverse();
            let reversed = features(&rev, &table);
            for f in counts.iter().copied().chain([Feature::CrossRatioQuad]) {
                check(fv.get(f) == reversed.get(f), || {
                    format!("case {case}: {f} changes under reversal")
                })?;
                check(fv.get(f) == scaled.get(f), || {
                    format!("case {case}: {f} changes under scaling")
                })?;
            }
            check(opt_close(fv.total_path, reversed.total_path, 1e-9), || {
                format!("case {case}: reversed path")
            })?;
        }
        Ok(format!(
            "1000 sequences (length 0-{max_len}) match the oracle; invariants, scaling and reversal hold"
        ))
    })();
    report(3, "feature oracle", outcome);
}

fn record(id: String, group: Group, covs: [f64; 3], unique: u32, value: f64) -> CohortRecord {
    let mut features = FeatureVector::empty(&id);
    features.unique_nodes = Some(unique);
    features.total_path = Some(value);
    CohortRecord {
        transcript_id: id,
        group: Some(group),
        age: Some(covs[0]),
        education: Some(covs[1]),
        gender: Some(covs[2]),
        features,
    }
}

#[test]
fn criterion_4_statistics_oracle() {
    let outcome = (|| {
        let one_way: Vec<CohortRecord> = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                let g = if i < 3 { Group::Unimpaired } else { Group::Impaired };
                record(format!("s{i}"), g, [70.0, 12.0, 0.0], 5, v)
            })
            .collect();
        let res = ancova_feature(&one_way, Feature::TotalPath).map_err(|e| e.to_string())?;
        check(rel_close(res.f_value, 13.5, 1e-9), || {
            format!("one-way F {}", res.f_value)
        })?;
        check((res.df_numerator, res.df_denominator) == (1, 4), || "one-way df".into())?;
        check((res.p_value - 0.0213).abs() <= 1e-4, || {
            format!("one-way p {}", res.p_value)
        })?;

        let mut r = rng(4040);
        let mut worst: f64 = 0.0;
        for fixture in 0..25 {
            let recs: Vec<CohortRecord> = (0..50)
                .map(|i| {
                    let group = if i % 2 == 0 { Group::Unimpaired } else { Group::Impaired };
                    let covs = [
                        r.random_range(55.0..90.0),
                        r.random_range(8.0..22.0),
                        r.random_range(0..2) as f64,
                    ];
                    let unique = r.random_range(2..20);
                    let value = 80.0 + 30.0 * group.indicator() + 2.0 * covs[0] - 4.0 * covs[1]
                        + 15.0 * unique as f64
                        + r.random_range(-120.0..120.0);
                    record(format!("r{i:02}"), group, covs, unique, value)
                })
                .collect();
            let res = ancova_feature(&recs, Feature::TotalPath).map_err(|e| e.to_string())?;
            let x: Vec<Vec<f64>> = recs
                .iter()
                .map(|r| {
                    let f = &r.features;
                    vec![
                        1.0,
                        r.group.unwrap().indicator(),
                        r.age.unwrap(),
                        r.education.unwrap(),
                        r.gender.unwrap(),
                        f.unique_nodes.unwrap() as f64,
                    ]
                })
                .collect();
            let y: Vec<f64> = recs.iter().map(|r| r.features.total_path.unwrap()).collect();
            let xr: Vec<Vec<f64>> = x.iter().map(|row| [&row[..1], &row[2..]].concat()).collect();
            let (beta, rss, _) = normal_equations(&x, &y);
            let (_, rss_red, _) = normal_equations(&xr, &y);
            let df = (x.len() - 6) as f64;
            let f = (rss_red - rss) / (rss / df);
            let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());
            worst = worst.max(rel(res.f_value, f));
            let means: Vec<f64> = (0..6).map(|j| x.iter().map(|row| row[j]).sum::<f64>() / 50.0).collect();
            for g in 0..2 {
                let mut m = means.clone();
                m[1] = g as f64;
                let emm: f64 = (0..6).map(|j| m[j] * beta[j]).sum();
                worst = worst.max(rel(res.emm[g], emm));
            }
            check(worst <= 1e-8, || format!("fixture {fixture}: relative error {worst:e}"))?;
        }

        let mut spots = Vec::new();
        for (f, d2) in [
            (0.5f64, 3.0f64),
            (1.0, 5.0),
            (2.5, 10.0),
            (4.0, 7.0),
            (10.0, 30.0),
            (0.1, 1.0),
        ] {
            spots.push((f, 2.0, d2, (d2 / (d2 + 2.0 * f)).powf(d2 / 2.0)));
        }
        for (f, d1) in [
            (0.5f64, 1.0f64),
            (1.0, 3.0),
            (3.0, 4.0),
            (7.0, 6.0),
            (20.0, 10.0),
            (0.25, 5.0),
        ] {
            spots.push((f, d1, 2.0, 1.0 - (d1 * f / (2.0 + d1 * f)).powf(d1 / 2.0)));
        }
        for f in [0.2f64, 1.0, 5.0, 50.0] {
            spots.push((f, 1.0, 1.0, 1.0 - 2.0 / std::f64::consts::PI * f.sqrt().atan()));
        }
        for f in [0.5f64, 2.0, 13.5, 40.0] {
            let s = (f / (4.0 + f)).sqrt();
            spots.push((f, 1.0, 4.0, 1.0 - 1.5 * s + 0.5 * s.powi(3)));
        }
        let mut worst_sf: f64 = 0.0;
        for &(f, d1, d2, want) in &spots {
            let got = f_sf(f, d1, d2).map_err(|e| e.to_string())?;
            worst_sf = worst_sf.max((got - want).abs());
        }
        check(spots.len() == 20 && worst_sf <= 1e-10, || {
            format!("f_sf error {worst_sf:e}")
        })?;
        check(t_quantile(0.975, 4.0).is_ok(), || "t quantile".into())?;
        Ok(format!(
            "one-way F=13.5 p={:.5}; 25 random 50-row fits within {worst:.1e}; 20 f_sf points within {worst_sf:.1e}",
            res.p_value
        ))
    })();
    report(4, "statistics oracle", outcome);
}

#[test]
fn criterion_5_synthetic_cohort() {
    let outcome = (|| {
        let pipeline = Pipeline::default();
        let start = Instant::now();
        let cohort = generate_cohort(&SynthSpec::repeat_effect(100, 1), &pipeline).map_err(|e| e.to_string())?;
        let records = cohort.records(&pipeline).map_err(|e| e.to_string())?;
        let rows = ancova_table(&records, &Feature::COLUMNS);
        let effect_secs = start.elapsed().as_secs_f64();
        let mut summary = Vec::new();
        for f in [
            Feature::TotalPath,
            Feature::Cycles,
            Feature::Nodes,
            Feature::PathPerUnique,
        ] {
            let row = rows.iter().find(|r| r.feature == f).unwrap();
            let res = row.outcome.as_ref().map_err(|e| format!("{f}: {e}"))?;
            check(res.p_value < 0.001, || format!("{f}: p = {:e}", res.p_value))?;
            check(res.emm[1] > res.emm[0], || {
                format!("{f}: impaired EMM {} <= {}", res.emm[1], res.emm[0])
            })?;
            summary.push(format!("{f} p={:.1e}", res.p_value));
        }

        let mut clean_seeds = 0;
        let mut star_counts = Vec::new();
        for seed in 0..100 {
            let cohort = generate_cohort(&SynthSpec::null(100, seed), &pipeline).map_err(|e| e.to_string())?;
            let records = cohort.records(&pipeline).map_err(|e| e.to_string())?;
            let stars = ancova_table(&records, &Feature::COLUMNS)
                .iter()
                .filter(|r| !r.stars().is_empty())
                .count();
            star_counts.push(stars);
            if stars <= 1 {
                clean_seeds += 1;
            }
        }
        let total_secs = start.elapsed().as_secs_f64();
        check(clean_seeds >= 90, || {
            format!("only {clean_seeds}/100 null seeds have <= 1 starred feature")
        })?;
        check(effect_secs < 60.0, || format!("effect cohort took {effect_secs:.1} s"))?;
        Ok(format!(
            "{}; null cohort clean on {clean_seeds}/100 seeds; effect run {effect_secs:.2} s, with null study {total_secs:.1} s",
            summary.join(", ")
        ))
    })();
    report(5, "synthetic cohort", outcome);
}

#[test]
fn criterion_6_determinism_and_composition() {
    let outcome = (|| {
        let dir = TempDir::new().map_err(|e| e.to_string())?;
        let out_dir = dir.path().to_str().unwrap();
        run(&[
            "synth",
            "--n-per-group",
            "40",
            "--seed",
            "9",
            "--effect",
            "--out-dir",
            out_dir,
        ])?;
        let manifest = dir.path().join("manifest.csv");
        let manifest = manifest.to_str().unwrap();
        let reference = run(&["batch", "--manifest", manifest, "--jobs", "1"])?;
        for jobs in ["2", "4", "8", "16"] {
            let other = run(&["batch", "--manifest", manifest, "--jobs", jobs])?;
            check(other == reference, || {
                format!("--jobs {jobs} output differs from --jobs 1")
            })?;
        }

        let seq = dir.path().join("seq.json");
        let seq = seq.to_str().unwrap();
        let mut inputs = 0;
        for name in ["reference.txt", "reference.cha", "transcripts/imp_001.txt"] {
            let input = if name.starts_with("transcripts") {
                dir.path().join(name)
            } else {
                fixture(name)
            };
            let input = input.to_str().unwrap();
            run(&["extract", "--input", input, "--out", seq])?;
            for csv in [false, true] {
                let flag: &[&str] = if csv { &["--csv"] } else { &[] };
                let staged = run(&[&["features", "--input", seq][..], flag].concat())?;
                let fused = run(&[&["features", "--input", input][..], flag].concat())?;
                check(staged == fused, || {
                    format!("{name}: staged and fused features differ (csv={csv})")
                })?;
            }
            inputs += 1;
        }
        Ok(format!(
            "batch of 80 identical for --jobs 1/2/4/8/16; staged == fused for {inputs} inputs in JSON and CSV"
        ))
    })();
    report(6, "determinism and composition", outcome);
}

#[test]
fn criterion_7_rendering() {
    let outcome = (|| {
        let bytes = fs::read(fixture("reference.txt")).map_err(|e| e.to_string())?;
        let pipeline = Pipeline::default();
        let seq = pipeline
            .extract_bytes("reference", &bytes, None)
            .map_err(|e| e.to_string())?;
        let graph = pipeline.graph(&seq).map_err(|e| e.to_string())?;

        let dot = to_dot(&graph);
        let parsed = graphviz_rust::parse(&dot).map_err(|e| format!("DOT does not parse: {e}"))?;
        let stmts = match &parsed {
            Graph::DiGraph { stmts, .. } | Graph::Graph { stmts, .. } => stmts,
        };
        let dot_nodes = stmts.iter().filter(|s| matches!(s, Stmt::Node(_))).count();
        let dot_edges = stmts.iter().filter(|s| matches!(s, Stmt::Edge(_))).count();

        let svg = render_svg(&graph, &SvgOptions::default());
        let doc = roxmltree::Document::parse(&svg).map_err(|e| format!("SVG is not well-formed: {e}"))?;
        let count = |class: &str| {
            doc.descendants()
                .filter(|n| n.has_tag_name("g") && n.attribute("class") == Some(class))
                .count()
        };
        let (nodes, edges) = (count("node"), count("edge"));
        let detail = format!(
            "DOT parses ({dot_nodes} node / {dot_edges} edge statements); SVG well-formed with {nodes} node and {edges} edge elements"
        );
        check(nodes == 15 && edges == 20, || {
            format!(
                "{detail}; expected 15 node elements, but the 21-element reference sequence visits {} distinct CIUs",
                graph.nodes().len()
            )
        })?;
        Ok(detail)
    })();
    report(7, "rendering", outcome);
}
