use std::fs;
use std::process::{Command, Output};

use contrastive_crop::{contrastive_crop, CropConfig, Rect, RngStream};

fn ccrop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccrop"))
        .args(args)
        .output()
        .expect("ccrop runs")
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

const SCENES: &str = "\
[scene]
object = 0.1 0.1 0.4 0.5
grid = 8 8
noise = 0.1

[scene]
object = 0.6 0.55 0.9 0.8
grid = 16 16
spread = 0.05
sharpness = 0:0 0.5:2 1:5
";

#[test]
fn sample_matches_the_library() {
    let out = stdout(&ccrop(&[
        "--seed",
        "42",
        "sample",
        "--box",
        "0.2,0.3,0.5,0.9",
        "--n",
        "50",
    ]));
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("index,x0,y0,x1,y1"));
    let b = Rect::new(0.2, 0.3, 0.5, 0.9).unwrap();
    let mut rng = RngStream::new(42, 0);
    let cfg = CropConfig::default();
    for (i, line) in lines.enumerate() {
        let r: Rect = contrastive_crop(&mut rng, &cfg, &b).unwrap();
        let [x0, y0, x1, y1] = r.to_array();
        assert_eq!(line, format!("{i},{x0},{y0},{x1},{y1}"));
    }
    assert_eq!(out.lines().count(), 51);
}

#[test]
fn sample_is_seeded() {
    let a = stdout(&ccrop(&[
        "--seed",
        "1",
        "sample",
        "--sampler",
        "random",
        "--n",
        "5",
    ]));
    let b = stdout(&ccrop(&[
        "--seed",
        "1",
        "sample",
        "--sampler",
        "random",
        "--n",
        "5",
    ]));
    let c = stdout(&ccrop(&[
        "--seed",
        "2",
        "sample",
        "--sampler",
        "random",
        "--n",
        "5",
    ]));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn localize_and_sample_from_heatmap() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.txt");
    fs::write(&path, "3 3\n0 0 0\n0 0.9 0.5\n0 0 0\n").unwrap();
    let p = path.to_str().unwrap();
    let out = stdout(&ccrop(&["localize", "--heatmap", p]));
    let third = 1.0f64 / 3.0;
    let twothirds = 2.0f64 / 3.0;
    assert_eq!(
        out,
        format!("x0,y0,x1,y1,fallback\n{third},{third},1,{twothirds},false\n")
    );
    let out = stdout(&ccrop(&["localize", "--heatmap", p, "--k", "1"]));
    assert_eq!(out, "x0,y0,x1,y1,fallback\n0,0,1,1,true\n");

    let out = stdout(&ccrop(&["sample", "--heatmap", p, "--n", "200"]));
    let b = Rect::new(third, third, 1.0, twothirds).unwrap();
    for line in out.lines().skip(1) {
        let v: Vec<f64> = line
            .split(',')
            .skip(1)
            .map(|t| t.parse().unwrap())
            .collect();
        let r = Rect::new(v[0], v[1], v[2], v[3]).unwrap();
        assert!(r.intersection_area(&b) > 0.0);
    }
}

#[test]
fn simulate_scheduled_and_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = dir.path().join("scenes.txt");
    fs::write(&scenes, SCENES).unwrap();
    let s = scenes.to_str().unwrap();
    let out = stdout(&ccrop(&["simulate", "--scenes", s, "--pairs", "4"]));
    let mut lines = out.lines();
    assert_eq!(
        lines.next(),
        Some("axis_name,axis_value,arm,n_pairs,fp_strict,fp_tau,mean_iou,se_iou,mean_cov,se_cov,seed")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    // default plan: 100 epochs, RandomCrop before epoch 20
    assert_eq!(rows[0][2], "random_crop");
    assert_eq!(rows[0][3], "80");
    assert_eq!(rows[1][2], "contrastive_crop");
    assert_eq!(rows[1][3], "320");

    let out = stdout(&ccrop(&[
        "simulate", "--scenes", s, "--pairs", "3000", "--oracle",
    ]));
    let rows: Vec<Vec<&str>> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert_eq!(r[3], "3000");
        if r[2] != "random_crop" {
            assert_eq!(r[4], "0");
        }
    }
}

#[test]
fn sweep_row_counts() {
    let k = stdout(&ccrop(&[
        "sweep",
        "--axis",
        "k",
        "--grid",
        "0,0.05,0.1,0.15,0.2,0.25,0.3",
        "--n-scenes",
        "2",
        "--pairs",
        "1",
    ]));
    assert_eq!(k.lines().count(), 1 + 7 * 3);
    let f = stdout(&ccrop(&[
        "sweep",
        "--axis",
        "freq",
        "--grid",
        "0,0.1,0.2,0.3,0.5",
        "--n-scenes",
        "2",
        "--pairs",
        "1",
    ]));
    assert_eq!(f.lines().count(), 1 + 5 * 3);
    assert!(f.lines().skip(1).all(|l| l.starts_with("freq,")));
    assert!(!f.contains('\r'));
}

#[test]
fn schedule_output() {
    let out = stdout(&ccrop(&["schedule", "--epochs", "500"]));
    assert_eq!(out, "update_epoch\n100\n200\n300\n400\n");
    let out = stdout(&ccrop(&["schedule", "--epochs", "100", "--freq", "0.5"]));
    assert_eq!(out, "update_epoch\n50\n");
    assert_eq!(
        stdout(&ccrop(&["schedule", "--freq", "0"])),
        "update_epoch\n"
    );
}

#[test]
fn config_file_and_out_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# short run\ntotal_epochs = 10\nupdate_freq = 1/2\n").unwrap();
    let out_path = dir.path().join("epochs.csv");
    let o = ccrop(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
        "schedule",
    ]);
    assert_eq!(stdout(&o), "");
    assert_eq!(fs::read_to_string(&out_path).unwrap(), "update_epoch\n5\n");
}

#[test]
fn bad_input_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "alpha = 0.6\nzoom = 3\n").unwrap();
    let o = ccrop(&["--config", cfg.to_str().unwrap(), "schedule"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("zoom"));

    let heat = dir.path().join("h.txt");
    fs::write(&heat, "2 2\n0 1\n-1 0\n").unwrap();
    assert_eq!(
        code(&ccrop(&["localize", "--heatmap", heat.to_str().unwrap()])),
        2
    );
    assert_eq!(
        code(&ccrop(&["localize", "--heatmap", "/nonexistent/h.txt"])),
        2
    );
    assert_eq!(code(&ccrop(&["sample", "--box", "0.5,0,0.5,1"])), 2);
    assert_eq!(code(&ccrop(&["sample", "--box", "0,0,1"])), 2);
    let o = ccrop(&[
        "sweep",
        "--axis",
        "alpha",
        "--grid",
        "0.6,-1",
        "--n-scenes",
        "1",
    ]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha must be positive"));
    assert_eq!(code(&ccrop(&["sweep", "--axis", "beta", "--grid", "1"])), 2);
    assert_eq!(code(&ccrop(&["--threads", "0", "schedule"])), 2);
    assert_eq!(code(&ccrop(&["frobnicate"])), 2);
}
