use std::path::Path;
use std::process::{Command, Output};

fn maxarc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxarc")).current_dir(dir).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

/// The 2-(6,2,1) design: all 15 pairs of a 6-set.
fn k6_design() -> String {
    let blocks: Vec<Vec<u32>> = (0..6).flat_map(|a| (a + 1..6).map(move |b| vec![a, b])).collect();
    serde_json::json!({ "v": 6, "blocks": blocks }).to_string()
}

#[test]
fn toy_family_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "k4.json", r#"{"modulus": 3, "base_blocks": [[1, 2]]}"#);
    let out = maxarc(dir.path(), &["pipeline", "--family", "k4.json", "--out-dir", "out"]);
    let manifest = json(&out);
    let s = &manifest["summary"];
    assert_eq!((s["classes"].as_u64(), s["resolutions"].as_u64(), s["m"].as_u64()), (Some(3), Some(1), Some(1)));
    assert_eq!(s["verdict"], "NO CLAIM");
    assert_eq!(s["aut"], 24);

    let table = maxarc(dir.path(), &["pipeline", "--family", "k4.json", "--format", "table"]);
    let text = String::from_utf8(table.stdout).unwrap();
    for column in ["|Aut|", "Par. Cl.", "Res.", "Comp. Res.", "NO CLAIM"] {
        assert!(text.contains(column), "missing {column} in\n{text}");
    }
}

#[test]
fn stage_by_stage_matches_pipeline_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "k6.json", &k6_design());
    json(&maxarc(d, &["classes", "--design", "k6.json", "--out-dir", "a"]));
    json(&maxarc(d, &["resolutions", "--design", "k6.json", "--classes", "a/classes.json", "--out-dir", "a"]));
    let graph = json(&maxarc(
        d,
        &[
            "compat-graph",
            "--design",
            "k6.json",
            "--classes",
            "a/classes.json",
            "--resolutions",
            "a/resolutions.json",
            "--dimacs",
            "k6.dimacs",
        ],
    ));
    assert_eq!(graph["vertices"], 6);
    let cliques = json(&maxarc(d, &["clique", "--graph", "k6.dimacs", "--out-dir", "a"]));
    assert_eq!(cliques["max_size"], 6);
    let planes = json(&maxarc(
        d,
        &[
            "embed",
            "--design",
            "k6.json",
            "--classes",
            "a/classes.json",
            "--resolutions",
            "a/resolutions.json",
            "--cliques",
            "a/cliques.json",
            "--out-dir",
            "a",
        ],
    ));
    assert_eq!(planes[0]["order"], 4);
    assert_eq!(planes[0]["isomorphic_to_desarguesian"], true);
    let plane = json(&maxarc(d, &["verify-plane", "--plane", "a/plane-0.json"]));
    assert_eq!(plane["q"], 4);
    json(&maxarc(d, &["verify-plane", "--arc", "a/arc-0.json"]));

    let manifest = json(&maxarc(d, &["pipeline", "--design", "k6.json", "--out-dir", "b"]));
    assert_eq!(manifest["summary"]["verdict"], "EMBEDDABLE");
    for file in ["classes.json", "resolutions.json", "cliques.json"] {
        assert_eq!(std::fs::read(d.join("a").join(file)).unwrap(), std::fs::read(d.join("b").join(file)).unwrap());
    }
    assert_eq!(std::fs::read(d.join("k6.dimacs")).unwrap(), std::fs::read(d.join("b/compat.dimacs")).unwrap());

    json(&maxarc(d, &["pipeline", "--design", "k6.json", "--out-dir", "c", "--single-thread"]));
    for file in ["design.json", "classes.json", "resolutions.json", "compat.dimacs", "cliques.json", "plane-0.json"] {
        assert_eq!(std::fs::read(d.join("b").join(file)).unwrap(), std::fs::read(d.join("c").join(file)).unwrap());
    }
}

#[test]
fn geometry_commands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let plane = json(&maxarc(d, &["pg2q", "--q", "4", "--out-dir", "g"]));
    assert_eq!(plane["points"], 21);
    assert_eq!(json(&maxarc(d, &["rank", "--plane", "g/plane.json"]))["rank"], 10);
    // |PGL(3,2)| = 168 for the Fano plane.
    json(&maxarc(d, &["pg2q", "--q", "2", "--out-dir", "f"]));
    assert_eq!(json(&maxarc(d, &["aut", "--plane", "f/plane.json"]))["group_order"], 168);
    let arc = json(&maxarc(d, &["denniston", "--q", "8", "--k", "2", "--out-dir", "h"]));
    assert_eq!(arc["arc_points"].as_array().unwrap().len(), 10);
    json(&maxarc(d, &["verify-plane", "--arc", "h/arc.json"]));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "bad.json", r#"{"modulus": 3"#);
    write(d, "unknown.json", r#"{"modulus": 3, "base_blocks": [[1, 2]], "extra": 1}"#);
    // F17 with one element moved: structurally sound, wrong differences.
    write(
        d,
        "invalid.json",
        r#"{"modulus": 51, "base_blocks": [[18, 33, 22, 47], [21, 30, 37, 31], [6, 45, 25, 43], [24, 27, 19, 49]]}"#,
    );
    write(d, "broken.json", r#"{"points": 3, "lines": [[0, 1], [1, 2]]}"#);
    assert_eq!(maxarc(d, &["validate-family", "--family", "bad.json"]).status.code(), Some(2));
    assert_eq!(maxarc(d, &["validate-family", "--family", "unknown.json"]).status.code(), Some(2));
    assert_eq!(maxarc(d, &["validate-family", "--family", "missing.json"]).status.code(), Some(2));
    assert_eq!(maxarc(d, &["validate-family"]).status.code(), Some(2));
    let invalid = maxarc(d, &["validate-family", "--family", "invalid.json"]);
    assert_eq!(invalid.status.code(), Some(3));
    let report: serde_json::Value = serde_json::from_slice(&invalid.stdout).unwrap();
    assert_eq!(report["differences_ok"], false);
    assert_eq!(maxarc(d, &["pipeline", "--family", "invalid.json"]).status.code(), Some(3));
    assert_eq!(maxarc(d, &["verify-plane", "--plane", "broken.json"]).status.code(), Some(3));
    assert_eq!(maxarc(d, &["pg2q", "--q", "6"]).status.code(), Some(3));
    assert_eq!(maxarc(d, &["no-such-command"]).status.code(), Some(2));
}

#[test]
fn f17_pipeline_summary_and_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let family = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/f17.json");
    let family = family.to_str().unwrap();
    let args = ["pipeline", "--family", family, "--out-dir", "out", "--cache-dir", "cache"];
    let manifest = json(&maxarc(d, &args));
    let s = &manifest["summary"];
    let counts: Vec<u64> =
        ["points", "blocks", "rank", "aut", "classes", "resolutions", "edges", "m", "bound", "cliques"]
            .iter()
            .map(|k| s[*k].as_u64().unwrap())
            .collect();
    assert_eq!(counts, [52, 221, 41, 408, 2550, 460, 1326, 52, 52, 1]);
    assert_eq!(s["verdict"], "EMBEDDABLE");
    assert_eq!(s["planes"][0]["p_rank"], 82);
    assert_eq!(s["planes"][0]["isomorphic_to_desarguesian"], true);

    // Manifest counts match the serialized artifacts.
    let read = |name: &str| -> serde_json::Value {
        serde_json::from_slice(&std::fs::read(d.join("out").join(name)).unwrap()).unwrap()
    };
    assert_eq!(read("design.json")["blocks"].as_array().unwrap().len(), 221);
    assert_eq!(read("classes.json")["classes"].as_array().unwrap().len(), 2550);
    assert_eq!(read("resolutions.json")["resolutions"].as_array().unwrap().len(), 460);
    assert_eq!(read("cliques.json")["cliques"].as_array().unwrap().len(), 1);
    let dimacs = std::fs::read_to_string(d.join("out/compat.dimacs")).unwrap();
    assert!(dimacs.lines().any(|l| l == "p edge 460 1326"));
    assert_eq!(read("arc-0.json")["arc_points"].as_array().unwrap().len(), 52);

    // Stage hashes chain, and a cached rerun reproduces every artifact.
    let stages = manifest["stages"].as_array().unwrap();
    for stage in stages {
        if let Some(from) = stage["input_from"].as_str() {
            let prior = stages.iter().find(|t| t["name"] == from).unwrap();
            assert_eq!(stage["input_hash"], prior["output_hash"]);
        }
    }
    let before: Vec<Vec<u8>> = ["classes.json", "resolutions.json", "compat.dimacs", "cliques.json", "plane-0.json"]
        .iter()
        .map(|f| std::fs::read(d.join("out").join(f)).unwrap())
        .collect();
    let rerun = json(&maxarc(d, &args));
    assert_eq!(rerun["summary"], manifest["summary"]);
    let cached: Vec<bool> =
        rerun["stages"].as_array().unwrap().iter().map(|s| s["cached"].as_bool().unwrap()).collect();
    assert!(cached.iter().filter(|&&c| c).count() == 2);
    let after: Vec<Vec<u8>> = ["classes.json", "resolutions.json", "compat.dimacs", "cliques.json", "plane-0.json"]
        .iter()
        .map(|f| std::fs::read(d.join("out").join(f)).unwrap())
        .collect();
    assert_eq!(before, after);
}
