use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dyadscreen"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(p: PathBuf) -> String {
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn synth(dir: &Path, n: &str) {
    ok(dir, &["synth", "--n", n, "--seed", "4", "--out", "c.jsonl", "--truth", "t.json"]);
}

#[test]
fn synth_then_ablate_gives_full_curve() {
    let t = tempfile::tempdir().unwrap();
    synth(t.path(), "250");
    ok(
        t.path(),
        &[
            "ablate", "--corpus", "c.jsonl", "--models", "lexicon-lr", "--configs",
            "patient,provider,combined", "--budgets", "128,256,512,full", "--out-dir", "out",
        ],
    );
    let curve = read(t.path().join("out/curve.csv"));
    let lines: Vec<&str> = curve.lines().collect();
    assert_eq!(lines[0], "model,tokens,config,auprc_mean,auprc_sd");
    assert_eq!(lines.len(), 1 + 12);
    let md = read(t.path().join("out/report.md"));
    assert_eq!(md.lines().filter(|l| l.starts_with("| lexicon-lr |")).count(), 12);
    assert!(md.contains("- seed: 0"));
}

#[test]
fn outputs_are_byte_identical_and_inputs_untouched() {
    let t = tempfile::tempdir().unwrap();
    synth(t.path(), "120");
    let before = std::fs::read(t.path().join("c.jsonl")).unwrap();
    let p = t.path();
    ok(p, &["featurize", "--corpus", "c.jsonl", "--config", "patient", "--budget", "256", "--out", "f.csv"]);
    for out in ["e1", "e2"] {
        ok(p, &["eval", "--features", "f.csv", "--seed", "9", "--out-dir", out, "--save-model", &format!("{out}/model.json")]);
    }
    for f in ["report.md", "report.json", "summary.csv", "per_fold.csv", "model.json"] {
        assert_eq!(read(p.join("e1").join(f)), read(p.join("e2").join(f)), "{f}");
    }
    ok(p, &["synth", "--n", "120", "--seed", "4", "--out", "c2.jsonl"]);
    assert_eq!(std::fs::read(p.join("c2.jsonl")).unwrap(), before);
    ok(p, &["ablate", "--corpus", "c.jsonl", "--budgets", "128,full", "--out-dir", "a1"]);
    ok(p, &["ablate", "--corpus", "c.jsonl", "--budgets", "128,full", "--out-dir", "a2"]);
    assert_eq!(read(p.join("a1/report.md")), read(p.join("a2/report.md")));
    ok(p, &["report", "--input", "a1/report.json", "--out-dir", "r"]);
    for f in ["report.md", "summary.csv", "per_fold.csv", "curve.csv", "report.json"] {
        assert_eq!(read(p.join("a1").join(f)), read(p.join("r").join(f)), "{f}");
    }
    assert_eq!(std::fs::read(p.join("c.jsonl")).unwrap(), before);
}

#[test]
fn embedding_path_and_stats() {
    let t = tempfile::tempdir().unwrap();
    let p = t.path();
    synth(p, "100");
    for c in ["patient", "provider", "combined"] {
        ok(p, &["chunks", "export", "--corpus", "c.jsonl", "--config", c, "--out", &format!("emb/chunks-{c}.jsonl")]);
        ok(p, &["chunks", "pseudo-embed", "--chunks", &format!("emb/chunks-{c}.jsonl"), "--dim", "8", "--out", &format!("emb/vectors-{c}.jsonl")]);
    }
    ok(p, &["pool", "--corpus", "c.jsonl", "--chunks", "emb/chunks-combined.jsonl", "--vectors", "emb/vectors-combined.jsonl", "--budget", "256", "--out", "pooled.csv"]);
    let header = read(p.join("pooled.csv")).lines().next().unwrap().to_string();
    assert!(header.starts_with("encounter_id,label,emb_0"));
    ok(p, &["ablate", "--corpus", "c.jsonl", "--models", "embedding-lr", "--embeddings-dir", "emb", "--out-dir", "ea"]);
    assert_eq!(read(p.join("ea/curve.csv")).lines().count(), 13);

    let unaligned = run(p, &["pool", "--corpus", "c.jsonl", "--chunks", "emb/chunks-combined.jsonl", "--vectors", "emb/vectors-combined.jsonl", "--budget", "200", "--out", "x.csv"]);
    assert_eq!(unaligned.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&unaligned.stderr).contains("embed"));

    ok(p, &["featurize", "--corpus", "c.jsonl", "--out", "f.csv"]);
    ok(p, &["stats", "--corpus", "c.jsonl", "--out", "g.csv", "--features", "f.csv", "--coefficients-out", "coef.csv", "--top-k", "3"]);
    let g = read(p.join("g.csv"));
    assert_eq!(g.lines().count(), 1 + 3 * 10);
    assert_eq!(read(p.join("coef.csv")).lines().count(), 1 + 3);
}

fn stub_server() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0usize;
            let mut line = String::new();
            loop {
                line.clear();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut body = vec![0; len];
            let _ = reader.read_exact(&mut body);
            let body = String::from_utf8_lossy(&body);
            // reply depends on the transcript so scores vary
            let score = (body.len() % 97) as f64 / 100.0;
            let payload = format!("{{\"choices\":[{{\"message\":{{\"content\":\"Risk {score}\"}}}}]}}");
            let mut s = stream;
            let _ = write!(
                s,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                payload.len()
            );
        }
    });
    format!("http://{addr}/v1/chat/completions")
}

#[test]
fn zeroshot_online_then_offline() {
    let t = tempfile::tempdir().unwrap();
    let p = t.path();
    synth(p, "40");
    let url = stub_server();
    ok(p, &["zeroshot", "--corpus", "c.jsonl", "--url", &url, "--model", "stub", "--budget", "128", "--out", "zs/scores-combined-128.csv"]);
    let scores = read(p.join("zs/scores-combined-128.csv"));
    assert!(scores.starts_with("encounter_id,score,status\n"));
    assert_eq!(scores.lines().count(), 41);
    ok(p, &["zeroshot-eval", "--corpus", "c.jsonl", "--scores", "zs/scores-combined-128.csv", "--budget", "128", "--out-dir", "ze"]);
    ok(p, &["ablate", "--corpus", "c.jsonl", "--models", "zero-shot", "--configs", "combined", "--budgets", "128", "--scores-dir", "zs", "--out-dir", "za"]);
    assert_eq!(read(p.join("ze/summary.csv")), read(p.join("za/summary.csv")));
    assert!(read(p.join("za/report.md")).contains("0 excluded"));

    let dead = {
        let l = TcpListener::bind("127.0.0.1:0").unwrap();
        format!("http://{}/v1/chat/completions", l.local_addr().unwrap())
    };
    let out = run(p, &["zeroshot", "--corpus", "c.jsonl", "--url", &dead, "--model", "m", "--retries", "0", "--backoff-ms", "0", "--out", "dead.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("zeroshot"));
}

#[test]
fn exit_codes() {
    let t = tempfile::tempdir().unwrap();
    let p = t.path();
    assert_eq!(run(p, &["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(p, &["ablate"]).status.code(), Some(2));
    assert_eq!(run(p, &["ablate", "--corpus", "c", "--out-dir", "o", "--configs", "nurse"]).status.code(), Some(2));
    let missing = run(p, &["featurize", "--corpus", "missing.jsonl", "--out", "f.csv"]);
    assert_eq!(missing.status.code(), Some(1));
    std::fs::write(p.join("bad.jsonl"), "{\"id\":\"a\",\"phq9\":3,\"utterances\":[{\"speaker\":\"nurse\",\"text\":\"hi\"}]}\n").unwrap();
    let bad = run(p, &["featurize", "--corpus", "bad.jsonl", "--out", "f.csv"]);
    assert_eq!(bad.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&bad.stderr);
    assert!(msg.contains("corpus:") && msg.contains("line 1"), "{msg}");
}

#[test]
fn every_subcommand_has_help_for_its_flags() {
    let cases: &[(&[&str], &[&str])] = &[
        (&["featurize"], &["--corpus", "--lexicon", "--config", "--budget", "--out"]),
        (&["chunks", "export"], &["--corpus", "--config", "--chunk-size", "--out"]),
        (&["chunks", "pseudo-embed"], &["--chunks", "--dim", "--seed", "--out"]),
        (&["pool"], &["--corpus", "--chunks", "--vectors", "--config", "--budget", "--chunk-size", "--out"]),
        (&["eval"], &["--features", "--k", "--seed", "--C", "--tol", "--max-iter", "--model", "--config", "--budget", "--out-dir", "--save-model"]),
        (&["ablate"], &["--corpus", "--lexicon", "--models", "--configs", "--budgets", "--k", "--seed", "--C", "--embeddings-dir", "--chunk-size", "--scores-dir", "--out-dir"]),
        (&["stats"], &["--corpus", "--lexicon", "--configs", "--out", "--features", "--coefficients-out", "--top-k"]),
        (&["zeroshot"], &["--corpus", "--config", "--budget", "--url", "--model", "--retries", "--concurrency", "--timeout-secs", "--backoff-ms", "--out"]),
        (&["zeroshot-eval"], &["--corpus", "--scores", "--config", "--budget", "--out-dir"]),
        (&["synth"], &["--spec", "--n", "--seed", "--out", "--truth", "--write-spec"]),
        (&["report"], &["--input", "--out-dir"]),
    ];
    let t = tempfile::tempdir().unwrap();
    for (cmd, flags) in cases {
        let mut args = cmd.to_vec();
        args.push("--help");
        let out = run(t.path(), &args);
        assert!(out.status.success(), "{cmd:?}");
        let text = String::from_utf8_lossy(&out.stdout);
        for f in *flags {
            assert!(text.contains(&format!("{f} ")) || text.contains(&format!("{f}\n")), "{cmd:?} missing {f}");
        }
    }
}
