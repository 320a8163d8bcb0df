use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;
use wmsn_stereo::parse_pgm;

fn wmsn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wmsn"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn generate(dir: &Path, prefix: &str, w: usize, h: usize, d: usize, seed: u64) {
    let o = wmsn(
        dir,
        &["generate", "--width", &w.to_string(), "--height", &h.to_string(), "--disparity", &d.to_string(), "--seed", &seed.to_string(), "--out", prefix],
    );
    assert!(o.status.success(), "{}", stderr(&o));
}

/// Gray values inside the valid band of a map computed with radius `r` and
/// `max_d`.
fn valid_band(img: &wmsn_stereo::GrayImage, r: usize, max_d: usize) -> Vec<u8> {
    let mut out = Vec::new();
    for y in r..img.height() - r {
        for x in r + max_d..img.width() - r {
            out.push(img.get(x, y));
        }
    }
    out
}

#[test]
fn shifted_pair_renders_constant_gray() {
    let dir = TempDir::new().unwrap();
    generate(dir.path(), "pair", 64, 48, 5, 11);
    let o = wmsn(dir.path(), &["disparity", "pair-left.pgm", "pair-right.pgm", "--radius", "2", "--max-disparity", "12", "--out", "sad"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("method=SAD valid_pixels=2112 elementary_ops=686400 "), "{text}");

    let gray = parse_pgm(&std::fs::read(dir.path().join("sad.pgm")).unwrap()).unwrap();
    // round(255 * 5 / 12) = 106
    let band = valid_band(&gray, 2, 12);
    assert_eq!(band.len(), 2112);
    assert!(band.iter().all(|&g| g == 106));
    assert_eq!(std::fs::metadata(dir.path().join("sad.dsp")).unwrap().len(), 16 + 3 * 64 * 48);

    let o = wmsn(dir.path(), &["disparity", "pair-left.pgm", "pair-right.pgm", "--radius", "2", "--max-disparity", "12", "--method", "ssd", "--out", "ssd"]);
    assert!(o.status.success());
    let o = wmsn(dir.path(), &["metrics", "sad.pgm", "ssd.pgm"]);
    assert_eq!(stdout(&o), "ssim=1.0\npsnr=inf\n");
}

#[test]
fn identical_views_render_zero() {
    let dir = TempDir::new().unwrap();
    generate(dir.path(), "pair", 40, 30, 0, 2);
    let o = wmsn(dir.path(), &["disparity", "pair-left.pgm", "pair-left.pgm", "--radius", "1", "--max-disparity", "6", "--out", "d"]);
    assert!(o.status.success());
    let gray = parse_pgm(&std::fs::read(dir.path().join("d.pgm")).unwrap()).unwrap();
    assert!(valid_band(&gray, 1, 6).iter().all(|&g| g == 0));
}

#[test]
fn depth_from_sidecar() {
    let dir = TempDir::new().unwrap();
    generate(dir.path(), "pair", 32, 20, 4, 5);
    wmsn(dir.path(), &["disparity", "pair-left.pgm", "pair-right.pgm", "--radius", "1", "--max-disparity", "8", "--out", "d"]);
    let o = wmsn(dir.path(), &["depth", "d.dsp", "--focal-length", "400", "--baseline", "0.2", "--out", "depth.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    // 400 * 0.2 / 4 = 20 m on every valid pixel.
    assert_eq!(stdout(&o), "pixels=640 with_depth=396 min_m=20 mean_m=20 max_m=20\n");
    let csv = std::fs::read_to_string(dir.path().join("depth.csv")).unwrap();
    assert_eq!(csv.lines().count(), 20);
    assert_eq!(csv.lines().nth(1).unwrap(), format!("{}20{},", ",".repeat(9), ",20".repeat(21)));
}

#[test]
fn same_file_twice_is_perfect() {
    let dir = TempDir::new().unwrap();
    generate(dir.path(), "pair", 24, 24, 1, 9);
    let o = wmsn(dir.path(), &["metrics", "pair-left.pgm", "pair-left.pgm"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "ssim=1.0\npsnr=inf\n");
    let o = wmsn(dir.path(), &["metrics", "pair-left.pgm", "pair-left.pgm", "--json"]);
    assert_eq!(stdout(&o), "{\"ssim\":1.0,\"psnr\":\"inf\"}\n");
}

#[test]
fn input_errors_exit_2_and_name_the_input() {
    let dir = TempDir::new().unwrap();
    generate(dir.path(), "a", 24, 24, 1, 1);
    generate(dir.path(), "b", 24, 16, 1, 1);

    let o = wmsn(dir.path(), &["metrics", "a-left.pgm", "missing.pgm"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("missing.pgm") && err.lines().count() == 1, "{err}");

    let o = wmsn(dir.path(), &["metrics", "a-left.pgm", "b-left.pgm"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dimension mismatch"));

    let o = wmsn(dir.path(), &["disparity", "a-left.pgm", "b-right.pgm", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));

    std::fs::write(dir.path().join("junk.pgm"), b"P2\n1 1\n255\n0\n").unwrap();
    let o = wmsn(dir.path(), &["metrics", "junk.pgm", "a-left.pgm"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("junk.pgm"));

    // Window plus search range wider than the image.
    let o = wmsn(dir.path(), &["disparity", "a-left.pgm", "a-right.pgm", "--max-disparity", "64", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));

    let o = wmsn(dir.path(), &["bench", "--sizes", "8x8", "--reps", "3"]);
    assert_eq!(o.status.code(), Some(2));

    let o = wmsn(dir.path(), &["disparity", "--method", "ncc", "a", "b", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
    let o = wmsn(dir.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_csv_schema() {
    let dir = TempDir::new().unwrap();
    let o = wmsn(dir.path(), &["bench", "--sizes", "32x24,48x32", "--radius", "1", "--max-disparity", "4", "--reps", "3", "--seed", "7"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "method,width,height,radius,max_disparity,reps,median_seconds,elementary_ops");
    assert_eq!(lines.len(), 5);
    assert!(text.ends_with('\n') && !text.contains('\r'));
    // Every column except the timing one is fixed.
    let stable: Vec<String> = lines[1..]
        .iter()
        .map(|l| {
            let mut cols: Vec<&str> = l.split(',').collect();
            let secs: f64 = cols[6].parse().unwrap();
            assert!(secs > 0.0);
            cols.remove(6);
            cols.join(",")
        })
        .collect();
    // ops = (w - 2r - max_d)(h - 2r) * (max_d + 1) * (2r + 1)^2
    assert_eq!(
        stable,
        [
            "SAD,32,24,1,4,3,25740",
            "SAD,48,32,1,4,3,56700",
            "SSD,32,24,1,4,3,25740",
            "SSD,48,32,1,4,3,56700",
        ]
    );
}

fn scenario_json(policy: &str, change: bool) -> Value {
    let changes = if change { json!([[5, 1]]) } else { json!([]) };
    json!({
        "nodes": [
            {"id": 0, "role": "sink", "position": [0.0, 0.0]},
            {"id": 1, "role": "camera", "battery_uj": 5000.0, "position": [1.0, 0.0]},
            {"id": 2, "role": "camera", "battery_uj": 5000.0, "position": [1.0, 0.1]},
            {"id": 3, "role": "relay", "battery_uj": 5000.0, "position": [0.5, 0.0]}
        ],
        "links": [[1, 3], [3, 0], [1, 2]],
        "pairs": [{
            "left_node": 1, "right_node": 2, "window_radius": 2, "max_disparity": 8,
            "frames": {"synthetic": {"width": 48, "height": 32, "steps": 10, "seed": 4, "disparity": 3, "changes": changes}}
        }],
        "policy": policy
    })
}

fn write_scenario(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn simulate(dir: &Path, scenario: &str, report: &str, extra: &[&str]) -> (Output, Value) {
    let mut args = vec!["simulate", scenario, "--out", report];
    args.extend_from_slice(extra);
    let o = wmsn(dir, &args);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.join(report)).unwrap()).unwrap();
    (o, report)
}

#[test]
fn static_scenario_reports_one_event() {
    let dir = TempDir::new().unwrap();
    write_scenario(dir.path(), "s.json", &scenario_json("disparity_on_event", false));
    let (o, report) = simulate(dir.path(), "s.json", "r.json", &[]);
    assert_eq!(report["events"].as_array().unwrap().len(), 1);
    assert_eq!(report["lifetime"], "survived");
    let text = stdout(&o);
    assert!(text.starts_with("steps=10 policy=disparity_on_event encoding=rle lifetime=survived\n"), "{text}");
    assert!(text.contains("raw_pair_bytes=3098"), "{text}");
}

#[test]
fn report_schema_is_stable() {
    let dir = TempDir::new().unwrap();
    write_scenario(dir.path(), "s.json", &scenario_json("disparity_on_event", true));
    let (_, report) = simulate(dir.path(), "s.json", "r.json", &[]);
    let keys = |v: &Value| -> Vec<String> { v.as_object().unwrap().keys().cloned().collect() };
    let mut top = keys(&report);
    top.sort();
    assert_eq!(top, ["encoding", "events", "lifetime", "nodes", "payload_sizes", "policy", "skipped", "steps", "totals", "transmissions"]);
    let mut node = keys(&report["nodes"][1]);
    node.sort();
    assert_eq!(
        node,
        ["bytes_transmitted", "deficit_uj", "died_at_step", "final_battery_uj", "id", "initial_battery_uj", "processing_uj", "role", "transmission_uj"]
    );
    let mut sizes = keys(&report["payload_sizes"][0]);
    sizes.sort();
    assert_eq!(
        sizes,
        ["height", "pair", "raw_pair_bytes", "rle_bytes_max", "rle_bytes_min", "rle_smaller_than_raw", "sidecar_bytes", "width"]
    );
    let mut tx = keys(&report["transmissions"][0]);
    tx.sort();
    assert_eq!(tx, ["bytes", "delivered", "hops_completed", "pair", "path", "payload", "step"]);
    let mut totals = keys(&report["totals"]);
    totals.sort();
    assert_eq!(totals, ["bytes_transmitted", "dropped", "elementary_ops", "events", "processing_uj", "transmission_uj", "transmissions"]);
    assert_eq!(report["events"].as_array().unwrap().len(), 2);
    assert_eq!(report["events"][1]["step"], 5);
}

#[test]
fn policy_override_orders_transmission_energy() {
    let dir = TempDir::new().unwrap();
    write_scenario(dir.path(), "s.json", &scenario_json("disparity_on_event", true));
    let (_, on_event) = simulate(dir.path(), "s.json", "a.json", &[]);
    let (_, raw) = simulate(dir.path(), "s.json", "b.json", &["--policy", "raw_always"]);
    assert_eq!(raw["policy"], "raw_always");
    let sizes = &on_event["payload_sizes"][0];
    assert_eq!(sizes["rle_smaller_than_raw"], true);
    let e = |r: &Value| r["totals"]["transmission_uj"].as_f64().unwrap();
    assert!(e(&on_event) < e(&raw));
}

#[test]
fn simulate_is_byte_deterministic() {
    let dir = TempDir::new().unwrap();
    write_scenario(dir.path(), "s.json", &scenario_json("disparity_always", true));
    simulate(dir.path(), "s.json", "a.json", &[]);
    simulate(dir.path(), "s.json", "b.json", &[]);
    assert_eq!(std::fs::read(dir.path().join("a.json")).unwrap(), std::fs::read(dir.path().join("b.json")).unwrap());
}

#[test]
fn bad_scenarios_exit_2_with_locations() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("broken.json"), "{\n  \"nodes\": [\n    {\"id\": 0,, }\n  ]\n}\n").unwrap();
    let o = wmsn(dir.path(), &["simulate", "broken.json", "--out", "r.json"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("broken.json") && err.contains("line 3, column"), "{err}");

    let mut invalid = scenario_json("disparity_on_event", false);
    invalid["pairs"][0]["left_node"] = json!(42);
    invalid["nodes"][1]["battery_uj"] = json!(-1.0);
    write_scenario(dir.path(), "invalid.json", &invalid);
    let o = wmsn(dir.path(), &["simulate", "invalid.json", "--out", "r.json"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("pairs[0].left_node") && err.contains("nodes[1].battery_uj"), "{err}");
    assert!(!dir.path().join("r.json").exists());

    let o = wmsn(dir.path(), &["simulate", "absent.json", "--out", "r.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.json"));
}

#[test]
fn shipped_example_scenario_runs() {
    let dir = TempDir::new().unwrap();
    let example = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/example.json");
    let (o, report) = simulate(dir.path(), example.to_str().unwrap(), "r.json", &[]);
    assert!(stdout(&o).contains("lifetime=survived"));
    assert_eq!(report["steps"], 10);
    assert!(report["payload_sizes"].as_array().unwrap().iter().all(|s| s["rle_smaller_than_raw"] == true));
}
