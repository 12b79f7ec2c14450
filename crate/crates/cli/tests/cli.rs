use std::fs::File;
use std::path::Path;
use std::process::{Command, Output};

use batched_eig::dense::{frobenius, reconstruct};
use batched_eig::format::{read_batch, read_matrix, write_batch};
use batched_eig::BatchedSymmetric;
use batched_eig_cli::CSV_HEADER;

fn bed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bed"))
        .args(args)
        .output()
        .expect("run bed")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_identity(path: &Path, batch: usize, dim: usize) {
    write_batch(&BatchedSymmetric::identity(batch, dim), File::create(path).unwrap()).unwrap();
}

#[test]
fn verify_identity_grid_passes() {
    let o = bed(&["verify", "--dims", "2", "--batches", "1", "--reps", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("all cells pass"));
}

#[test]
fn verify_step_grid_reports_table_and_r() {
    let o = bed(&["verify", "--dims", "4..12:4", "--batches", "8", "--reps", "1", "--seed", "42"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    for n in [4, 8, 12] {
        assert!(out.contains(&format!("r at n={n}")), "{out}");
    }
}

#[test]
fn verify_catches_corruption() {
    let o = bed(&["verify", "--dims", "5", "--batches", "3", "--reps", "1", "--corrupt"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("(5, 3, 0)"));
}

#[test]
fn verify_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("v.csv");
    let o = bed(&["verify", "--dims", "3", "--batches", "2", "--reps", "1", "--csv", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn bench_prints_csv_with_exact_header() {
    let o = bed(&["bench", "--dims", "4,6", "--batches", "1,8", "--reps", "2", "--mode", "values"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f.len(), 9);
        assert_eq!(f[2], "values");
        assert!(f[3].parse::<f64>().unwrap() > 0.0);
        let r: f64 = f[5].parse().unwrap();
        let dim: f64 = f[0].parse().unwrap();
        assert!(r <= dim - 1.0);
        assert!(f[8].parse::<f64>().unwrap() <= 1e-8);
    }
}

#[test]
fn bench_counters_ignore_reps() {
    let counters = |reps: &str| -> Vec<String> {
        let o = bed(&["bench", "--dims", "6", "--batches", "4", "--reps", reps, "--seed", "3"]);
        assert_eq!(o.status.code(), Some(0));
        stdout(&o)
            .lines()
            .skip(1)
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                [f[5], f[6], f[7], f[8]].join(",")
            })
            .collect()
    };
    assert_eq!(counters("1"), counters("6"));
}

#[test]
fn solve_identity_gives_unit_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("id.bed");
    write_identity(&input, 3, 4);
    let out = dir.path().join("res");
    let o = bed(&["solve", input.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rotations"));
    let values = read_matrix(File::open(dir.path().join("res.values.bed")).unwrap()).unwrap();
    assert_eq!((values.batch(), values.rows(), values.cols()), (3, 4, 1));
    assert!(values.data().iter().all(|&x| x == 1.0));
    let vectors = read_matrix(File::open(dir.path().join("res.vectors.bed")).unwrap()).unwrap();
    assert_eq!((vectors.batch(), vectors.rows(), vectors.cols()), (3, 4, 4));
}

#[test]
fn no_vectors_skips_the_vector_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("id.bed");
    write_identity(&input, 1, 3);
    let out = dir.path().join("res");
    let o = bed(&["solve", input.to_str().unwrap(), "--out", out.to_str().unwrap(), "--no-vectors"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("res.values.bed").exists());
    assert!(!dir.path().join("res.vectors.bed").exists());
}

#[test]
fn gen_then_solve_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("a.bed");
    let o = bed(&["gen", "--out", input.to_str().unwrap(), "--dims", "7", "--batches", "5", "--seed", "11"]);
    assert_eq!(o.status.code(), Some(0));
    let out = dir.path().join("a");
    assert_eq!(bed(&["solve", input.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.code(), Some(0));
    let a = read_batch(File::open(&input).unwrap()).unwrap();
    let values = read_matrix(File::open(dir.path().join("a.values.bed")).unwrap()).unwrap();
    let vectors = read_matrix(File::open(dir.path().join("a.vectors.bed")).unwrap()).unwrap();
    for k in 0..5 {
        let rec = reconstruct(vectors.matrix(k), values.matrix(k), 7);
        let diff: Vec<f64> = rec.iter().zip(a.matrix(k)).map(|(x, y)| x - y).collect();
        assert!(frobenius(&diff) <= 1e-10 * frobenius(a.matrix(k)));
    }
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (p, q) = (dir.path().join("p.bed"), dir.path().join("q.bed"));
    for path in [&p, &q] {
        assert_eq!(bed(&["gen", "--out", path.to_str().unwrap(), "--seed", "5"]).status.code(), Some(0));
    }
    assert_eq!(std::fs::read(p).unwrap(), std::fs::read(q).unwrap());
}

#[test]
fn exit_codes() {
    assert_eq!(bed(&["verify", "--dims", "1"]).status.code(), Some(2));
    assert_eq!(bed(&["bench", "--mode", "fast"]).status.code(), Some(2));
    assert_eq!(bed(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.bed");
    let out = dir.path().join("o");
    assert_eq!(
        bed(&["solve", missing.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.code(),
        Some(3)
    );
    let junk = dir.path().join("junk.bed");
    std::fs::write(&junk, b"NOPE0000000000000000").unwrap();
    assert_eq!(
        bed(&["solve", junk.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.code(),
        Some(3)
    );
}

#[test]
fn thread_cap_is_honoured() {
    let o = Command::new(env!("CARGO_BIN_EXE_bed"))
        .args(["verify", "--dims", "3", "--batches", "2", "--reps", "1"])
        .env("BED_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let o = Command::new(env!("CARGO_BIN_EXE_bed"))
        .args(["verify", "--dims", "3", "--batches", "2", "--reps", "1"])
        .env("BED_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
