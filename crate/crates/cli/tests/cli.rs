use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use phase_hpss::stft::dump;
use phase_hpss::{read_wav, synth, write_wav, BitDepth, Signal};

const SR: u32 = 8000;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phase-hpss"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Writes a one-second synthetic mixture and its stems as float WAV files.
fn fixture(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let tr = &synth::corpus(1, 1, SR, SR as usize)[0];
    let paths = ["mix.wav", "h.wav", "p.wav"].map(|n| dir.join(n));
    write_wav(&paths[0], &tr.mixture, BitDepth::Float32).unwrap();
    write_wav(&paths[1], &tr.harmonic, BitDepth::Float32).unwrap();
    write_wav(&paths[2], &tr.percussive, BitDepth::Float32).unwrap();
    let [a, b, c] = paths;
    (a, b, c)
}

const FAST: [&str; 4] = ["--win", "256", "--hop", "64"];

#[test]
fn separate_with_defaults_reconstructs_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let (mix, _, _) = fixture(dir.path());
    let (h, pc) = (dir.path().join("oh.wav"), dir.path().join("op.wav"));
    let o = run(&["separate", p(&mix), "--out-h", p(&h), "--out-p", p(&pc)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (x, h, pc) = (
        read_wav(&mix).unwrap(),
        read_wav(&h).unwrap(),
        read_wav(&pc).unwrap(),
    );
    assert_eq!(h.len(), x.len());
    for ((x, h), q) in x.samples().iter().zip(h.samples()).zip(pc.samples()) {
        let lsb = f64::from(f32::EPSILON) * x.abs().max(h.abs()).max(q.abs());
        assert!((x - h - q).abs() <= lsb, "{x} vs {h} + {q}");
    }
}

#[test]
fn zero_iterations_reproduce_the_median_filter() {
    let dir = tempfile::tempdir().unwrap();
    let (mix, _, _) = fixture(dir.path());
    let out = |tag: &str| dir.path().join(format!("{tag}.wav"));
    let mut a = vec!["separate", p(&mix), "--method", "mf"];
    a.extend(FAST);
    let (mh, mp) = (out("mh"), out("mp"));
    a.extend(["--out-h", p(&mh), "--out-p", p(&mp)]);
    assert_eq!(code(&run(&a)), 0);

    let (zh, zp, trace) = (out("zh"), out("zp"), dir.path().join("trace.csv"));
    let mut b = vec!["separate", p(&mix), "--iters", "0", "--trace", p(&trace)];
    b.extend(FAST);
    b.extend(["--out-h", p(&zh), "--out-p", p(&zp)]);
    assert_eq!(code(&run(&b)), 0);
    assert_eq!(read_wav(&mh).unwrap(), read_wav(&zh).unwrap());
    assert_eq!(read_wav(&mp).unwrap(), read_wav(&zp).unwrap());
    assert_eq!(fs::read_to_string(&trace).unwrap().lines().count(), 1);
}

#[test]
fn config_file_overrides_flags_and_trace_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let (mix, _, _) = fixture(dir.path());
    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, "n_iters = 3\nlambda = 0.2\n").unwrap();
    let trace = dir.path().join("trace.csv");
    let (h, q) = (dir.path().join("h_out.wav"), dir.path().join("p_out.wav"));
    let mut a = vec![
        "separate",
        p(&mix),
        "--iters",
        "7",
        "--config",
        p(&cfg),
        "--trace",
        p(&trace),
    ];
    a.extend(FAST);
    a.extend(["--out-h", p(&h), "--out-p", p(&q)]);
    let o = run(&a);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&trace).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "iteration,total,smooth_term,sparse_term,primal_increment"
    );
    assert_eq!(lines.len(), 4);
}

#[test]
fn oracle_frequencies_from_a_reference_file() {
    let dir = tempfile::tempdir().unwrap();
    let (mix, href, _) = fixture(dir.path());
    let src = format!("oracle:{}", p(&href));
    let (h, q) = (dir.path().join("h_out.wav"), dir.path().join("p_out.wav"));
    let mut a = vec!["separate", p(&mix), "--if-source", &src, "--iters", "5"];
    a.extend(FAST);
    a.extend(["--out-h", p(&h), "--out-p", p(&q)]);
    assert_eq!(code(&run(&a)), 0);

    let missing = format!("oracle:{}", p(&dir.path().join("nope.wav")));
    let mut b = vec!["separate", p(&mix), "--if-source", &missing];
    b.extend(FAST);
    b.extend(["--out-h", p(&h), "--out-p", p(&q)]);
    assert_eq!(code(&run(&b)), 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (mix, _, _) = fixture(dir.path());
    let (h, q) = (dir.path().join("h_out.wav"), dir.path().join("p_out.wav"));
    let outs = ["--out-h", p(&h), "--out-p", p(&q)];

    assert_eq!(code(&run(&["separate"])), 1);
    assert_eq!(code(&run(&["separate", p(&mix), "--lambda", "abc"])), 1);
    let mut bad_alpha = vec!["separate", p(&mix), "--alpha", "2.5"];
    bad_alpha.extend(outs);
    assert_eq!(code(&run(&bad_alpha)), 1);
    let mut bad_hop = vec!["separate", p(&mix), "--win", "256", "--hop", "100"];
    bad_hop.extend(outs);
    assert_eq!(code(&run(&bad_hop)), 1);
    let bad_cfg = dir.path().join("bad.toml");
    fs::write(&bad_cfg, "unknown_key = 1\n").unwrap();
    let mut a = vec!["separate", p(&mix), "--config", p(&bad_cfg)];
    a.extend(outs);
    assert_eq!(code(&run(&a)), 1);

    let missing = dir.path().join("missing.wav");
    let mut a = vec!["separate", p(&missing)];
    a.extend(outs);
    assert_eq!(code(&run(&a)), 2);
    let mut a = vec![
        "separate",
        p(&mix),
        "--out-h",
        "/nonexistent-dir/h.wav",
        "--out-p",
        p(&q),
    ];
    a.extend(FAST);
    assert_eq!(code(&run(&a)), 2);

    // A primal step far beyond the stability bound blows the iterates up.
    let mut a = vec![
        "separate",
        p(&mix),
        "--mu1",
        "1e10",
        "--mu2",
        "1",
        "--iters",
        "200",
    ];
    a.extend(FAST);
    a.extend(outs);
    let o = run(&a);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));

    let o = run(&["--help"]);
    assert_eq!(code(&o), 0);
    let o = run(&["separate", "--help"]);
    let help = String::from_utf8_lossy(&o.stdout);
    assert!(help.contains("--lambda") && help.contains("[default: 0.5]"));
}

#[test]
fn eval_single_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (_, h, q) = fixture(dir.path());
    let o = run(&[
        "eval",
        "--ref-h",
        p(&h),
        "--ref-p",
        p(&q),
        "--est-h",
        p(&h),
        "--est-p",
        p(&q),
        "--filter-len",
        "32",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let row: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .skip(2)
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(row.len(), 9);
    assert!(row.iter().all(|v| *v >= 100.0), "{row:?}");

    // Swapped estimates.
    let o = run(&[
        "eval",
        "--ref-h",
        p(&h),
        "--ref-p",
        p(&q),
        "--est-h",
        p(&q),
        "--est-p",
        p(&h),
        "--filter-len",
        "32",
    ]);
    let text = String::from_utf8(o.stdout).unwrap();
    let sir_h: f64 = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(3)
        .unwrap()
        .parse()
        .unwrap();
    assert!(sir_h < 0.0);

    // Manifest of three tracks, relative paths.
    let manifest = dir.path().join("list.csv");
    fs::write(
        &manifest,
        "track,method,ref_h,ref_p,est_h,est_p\n\
         a,x,h.wav,p.wav,h.wav,p.wav\n\
         b,x,h.wav,p.wav,p.wav,h.wav\n\
         c,x,h.wav,p.wav,h.wav,p.wav\n",
    )
    .unwrap();
    let out = dir.path().join("table.csv");
    let o = run(&[
        "eval",
        "--manifest",
        p(&manifest),
        "--filter-len",
        "16",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<String>> = text
        .lines()
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[4][0], "mean");
    for col in 2..11 {
        let vals: Vec<f64> = rows[1..4].iter().map(|r| r[col].parse().unwrap()).collect();
        let mean: f64 = rows[4][col].parse().unwrap();
        assert!((mean - vals.iter().sum::<f64>() / 3.0).abs() < 1e-3);
    }
}

#[test]
fn eval_rejects_length_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let (_, h, q) = fixture(dir.path());
    let short = dir.path().join("short.wav");
    write_wav(
        &short,
        &Signal::new(vec![0.1; 100], SR).unwrap(),
        BitDepth::Float32,
    )
    .unwrap();
    let o = run(&[
        "eval",
        "--ref-h",
        p(&h),
        "--ref-p",
        p(&q),
        "--est-h",
        p(&short),
        "--est-p",
        p(&q),
    ]);
    assert_eq!(code(&o), 1);
    assert_eq!(code(&run(&["eval", "--ref-h", p(&h)])), 1);
}

#[test]
fn bench_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run_once = |tag: &str| {
        let (table, trace) = (
            dir.path().join(format!("{tag}.csv")),
            dir.path().join(format!("{tag}-trace.csv")),
        );
        let o = run(&[
            "bench",
            "--seed",
            "7",
            "--tracks",
            "2",
            "--seconds",
            "0.5",
            "--sample-rate",
            "8000",
            "--filter-len",
            "16",
            "--iters",
            "5",
            "--win",
            "256",
            "--hop",
            "64",
            "--table",
            p(&table),
            "--trace",
            p(&trace),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        (fs::read(table).unwrap(), fs::read(trace).unwrap())
    };
    let (a, ta) = run_once("a");
    let (b, tb) = run_once("b");
    assert_eq!(a, b);
    assert_eq!(ta, tb);
    let text = String::from_utf8(a).unwrap();
    // 2 tracks x 3 methods + 3 mean rows + header.
    assert_eq!(text.lines().count(), 10);
    assert_eq!(
        String::from_utf8(ta).unwrap().lines().count(),
        1 + 2 * 2 * 5
    );
}

#[test]
fn dump_spec_writes_decodable_files() {
    let dir = tempfile::tempdir().unwrap();
    let (mix, _, _) = fixture(dir.path());
    let (s, v) = (dir.path().join("s.bin"), dir.path().join("v.bin"));
    let o = run(&[
        "dump-spec",
        p(&mix),
        "--win",
        "256",
        "--hop",
        "64",
        "--spec-out",
        p(&s),
        "--if-out",
        p(&v),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let ds = dump::read_file(&s).unwrap();
    let dv = dump::read_file(&v).unwrap();
    assert_eq!((ds.n_bins, ds.win_len), (129, 256));
    assert_eq!((dv.n_bins, dv.n_frames), (ds.n_bins, ds.n_frames));
    assert!(matches!(ds.payload, dump::DumpPayload::Complex(_)));
    assert!(matches!(dv.payload, dump::DumpPayload::Real(_)));
    assert_eq!(code(&run(&["dump-spec", p(&mix)])), 1);
}
