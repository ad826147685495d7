//! End-to-end runs of the `tileforge` binary against frozen golden files.
//! Set `UPDATE_GOLDEN=1` to rewrite them.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tileforge"));
    cmd.env_remove("TILEFORGE_THREADS");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn assert_golden(name: &str, actual: &[u8]) {
    let path = golden_dir().join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(golden_dir()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read(&path).unwrap_or_else(|e| panic!("missing golden {}: {e}", path.display()));
    assert!(
        expected == actual,
        "{name} differs from golden:\n{}",
        String::from_utf8_lossy(actual)
    );
}

fn stdout_of(args: &[&str], code: i32) -> Vec<u8> {
    let out = run(args);
    assert_eq!(
        out.status.code(),
        Some(code),
        "{args:?}\nstdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn gen_board(dir: &Path, name: &str, p: &str, abc: [&str; 3], window: &str) -> String {
    let path = dir.join(name);
    let path = path.to_str().unwrap().to_string();
    let w = format!("--window={window}");
    stdout_of(
        &["sudoku", "gen", "--p", p, "--a", abc[0], "--b", abc[1], "--c", abc[2], &w, "--out", &path],
        0,
    );
    path
}

#[test]
fn render_banded_board_golden() {
    let dir = tempfile::tempdir().unwrap();
    let board = gen_board(dir.path(), "b.board", "5", ["0", "1", "0"], "0:25");
    let ascii = stdout_of(&["render", "--board", &board, "--format", "ascii"], 0);
    assert_golden("render_p5_gen010.txt", &ascii);
    let pgm = stdout_of(&["render", "--board", &board, "--format", "pgm"], 0);
    assert_golden("render_p5_gen010.pgm", &pgm);
    let by_value = stdout_of(&["sudoku", "render", "--board", &board, "--by-value"], 0);
    assert_golden("render_p5_gen010_values.txt", &by_value);

    // A grey band on every fifth row that is not a multiple of 25.
    let text = String::from_utf8(ascii).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    for (k, row) in rows.iter().enumerate() {
        let m = 25 - k as i64;
        let glyph = match m {
            0 => '*',
            m if m % 25 == 0 => '#',
            m if m % 5 == 0 => ':',
            _ => '.',
        };
        assert!(row.chars().all(|c| c == glyph), "row m={m}: {row}");
    }
}

#[test]
fn unknown_render_format_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let board = gen_board(dir.path(), "b.board", "3", ["1", "1", "0"], "0:2");
    let out = run(&["render", "--board", &board, "--format", "svg"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown format"));
}

#[test]
fn padic_eval_golden() {
    let out = stdout_of(&["padic", "eval", "--p", "5", "--from", "-20", "--to", "20"], 0);
    assert_golden("padic_eval_p5.txt", &out);
}

#[test]
fn padic_classify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.txt", "# constant and affine\n1 1 1 1 1 1 1 1 1\n1 2 1 1 2 2 1 2 1\n");
    let out = stdout_of(&["padic", "classify", "--p", "3", "--line", &good], 0);
    assert_golden("padic_classify_p3.txt", &out);
    let bad = write(dir.path(), "bad.txt", "1 2 2 1 1 1 1 1 1\n");
    stdout_of(&["padic", "classify", "--p", "3", "--line", &bad], 1);
    let short = write(dir.path(), "short.txt", "1 2\n");
    stdout_of(&["padic", "classify", "--p", "3", "--line", &short], 2);
}

#[test]
fn find_partition_golden_and_deterministic() {
    let args = ["find-partition", "--group", "Z/7 x Z/7", "--parts", "2", "--seed", "11", "--budget", "1000000"];
    let first = stdout_of(&args, 0);
    assert_eq!(first, stdout_of(&args, 0));
    assert_golden("find_partition_z7sq_seed11.txt", &first);
    // Z/2 has no intersective partition into two parts.
    stdout_of(&["find-partition", "--group", "Z/2", "--parts", "2"], 1);
}

const SYSTEM: &str = "\
group Z/6
lattice finite
residues: (();(0)) (();(3))
tile: (();(0)) (();(1)) (();(2))
tile: (();(0)) (();(2)) (();(4))
";

#[test]
fn verify_stack_round() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "sys.txt", SYSTEM);
    assert_golden("verify_system.txt", &stdout_of(&["verify-tiling", "--instance", &inst], 0));

    let part = dir.path().join("part.txt");
    let part = part.to_str().unwrap();
    stdout_of(&["find-partition", "--group", "Z/7 x Z/7", "--out", part], 0);
    let stacked = dir.path().join("stacked.txt");
    let stacked = stacked.to_str().unwrap();
    stdout_of(&["stack", "--instance", &inst, "--partition", part, "--out", stacked], 0);
    let report = String::from_utf8(stdout_of(&["verify-tiling", "--instance", stacked], 0)).unwrap();
    assert!(report.contains("tiles 147\n") && report.ends_with("result ok\n"), "{report}");

    let bad = write(dir.path(), "bad.txt", &SYSTEM.replace("(();(3))", "(();(2))"));
    let report = String::from_utf8(stdout_of(&["verify-tiling", "--instance", &bad], 1)).unwrap();
    assert!(report.ends_with("result defects\n"));
}

#[test]
fn verify_enumerates_without_residues() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "e.txt", "group Z/6\nlattice finite\ntile: (();(0)) (();(1)) (();(2))\ntile: (();(0)) (();(2)) (();(4))\n");
    assert_golden("verify_enumerate.txt", &stdout_of(&["verify-tiling", "--instance", &inst], 0));
    let none = write(dir.path(), "n.txt", "group Z/4\nlattice finite\ntile: (();(0)) (();(1)) (();(2))\n");
    stdout_of(&["verify-tiling", "--instance", &none], 1);
    let malformed = write(dir.path(), "m.txt", "group Z/4\nlattice finite\ntile: (();(0)\n");
    let out = run(&["verify-tiling", "--instance", &malformed]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn encode_checks_golden() {
    for (name, args) in [
        ("encode_check_periodicity.txt", vec!["--encoder", "periodicity", "--L", "4", "--fiber", "2"]),
        ("encode_check_shift.txt", vec!["--encoder", "shift", "--L", "6", "--n", "3"]),
        ("encode_check_linear.txt", vec!["--encoder", "linear", "--L", "4", "--q", "3", "--a", "2"]),
        ("encode_check_boolpair.txt", vec!["--encoder", "boolpair", "--L", "2", "--q", "3"]),
    ] {
        let mut full = vec!["encode", "check"];
        full.extend(args);
        assert_golden(name, &stdout_of(&full, 0));
    }
    // The shift encoder needs n | L.
    stdout_of(&["encode", "check", "--encoder", "shift", "--L", "4", "--n", "3"], 2);
    stdout_of(&["encode", "check", "--encoder", "nope", "--L", "4"], 2);
}

#[test]
fn encoded_instances_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    for (name, args) in [
        ("per.txt", vec!["periodicity", "--base", "Z^2", "--fiber", "Z/3", "--v", "((1,2);())"]),
        ("shift.txt", vec!["shift", "--n", "4"]),
        ("lin.txt", vec!["linear", "--q", "5", "--a=1,-1"]),
        ("bool.txt", vec!["boolpair", "--q", "3"]),
    ] {
        let path = dir.path().join(name);
        let path = path.to_str().unwrap();
        let mut full = vec!["encode"];
        full.extend(args);
        full.extend(["--out", path]);
        stdout_of(&full, 0);
        let text = std::fs::read_to_string(path).unwrap();
        let inst = tileforge::io::parse_instance(&text).unwrap();
        assert!(inst.residues.is_none());
        assert!(!inst.tiles.is_empty());
    }
}

#[test]
fn sudoku_verify_and_columns() {
    let dir = tempfile::tempdir().unwrap();
    let board = gen_board(dir.path(), "g.board", "5", ["2", "3", "1"], "0:124");
    let report = stdout_of(&["sudoku", "verify", "--board", &board], 0);
    assert_golden("sudoku_verify_p5_gen231.txt", &report);
    stdout_of(&["sudoku", "verify", "--board", &board, "--partial", "extend"], 0);

    let cols = stdout_of(&["sudoku", "columns", "--board", &board, "--Q", "5"], 0);
    assert_golden("sudoku_columns_p5_gen231.txt", &cols);

    // A board with one altered cell fails.
    let text = std::fs::read_to_string(&board).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut row: Vec<u8> = lines[40].split(' ').map(|v| v.parse().unwrap()).collect();
    row[7] = row[7] % 4 + 1;
    lines[40] = row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
    let broken = write(dir.path(), "broken.board", &(lines.join("\n") + "\n"));
    let report = String::from_utf8(stdout_of(&["sudoku", "verify", "--board", &broken], 1)).unwrap();
    assert!(report.contains("failure j="), "{report}");

    // Constant columns cannot refute periods.
    let flat = gen_board(dir.path(), "flat.board", "3", ["1", "0", "0"], "0:20");
    stdout_of(&["sudoku", "columns", "--board", &flat, "--Q", "2"], 1);
}

#[test]
fn sudoku_search_finds_boards() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("found");
    let out = stdout_of(
        &[
            "sudoku",
            "search",
            "--p",
            "3",
            "--window",
            "0:1",
            "--fix",
            "1,0,2",
            "--max-boards",
            "3",
            "--out-dir",
            out_dir.to_str().unwrap(),
        ],
        0,
    );
    let report = String::from_utf8(out).unwrap();
    assert!(report.contains("boards 3\n"), "{report}");
    for k in 1..=3 {
        let text = std::fs::read_to_string(out_dir.join(format!("board_{k:04}.board"))).unwrap();
        let board = tileforge::io::parse_board(&text).unwrap();
        assert_eq!(board.get(1, 0), Some(2));
    }
    stdout_of(&["sudoku", "search", "--p", "3", "--window", "0:1", "--fix", "10,0,1"], 2);
}

#[test]
fn analyze_golden() {
    let dir = tempfile::tempdir().unwrap();
    let board = gen_board(dir.path(), "m.board", "5", ["0", "1", "0"], "0:624");
    let raw = stdout_of(&["analyze", "--board", &board, "--depth", "2", "--Q", "25"], 0);
    assert_golden("analyze_p5_gen010.txt", &raw);
    let shifted = gen_board(dir.path(), "s.board", "5", ["0", "1", "3"], "0:624");
    let norm = stdout_of(&["analyze", "--board", &shifted, "--depth", "2", "--Q", "5", "--normalize"], 0);
    assert_golden("analyze_p5_gen013_normalized.txt", &norm);
}

#[test]
fn thread_cap_does_not_change_reports() {
    let dir = tempfile::tempdir().unwrap();
    let board = gen_board(dir.path(), "t.board", "5", ["1", "2", "3"], "0:200");
    let strip = |out: Vec<u8>| -> String {
        String::from_utf8(out).unwrap().lines().skip(1).collect::<Vec<_>>().join("\n")
    };
    let default = strip(stdout_of(&["sudoku", "verify", "--board", &board], 0));
    let capped = bin()
        .env("TILEFORGE_THREADS", "1")
        .args(["sudoku", "verify", "--board", &board])
        .output()
        .unwrap();
    assert_eq!(capped.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&capped.stdout).starts_with("# tileforge sudoku verify seed=0 budget=none threads=1\n"));
    assert_eq!(strip(capped.stdout), default);

    let bad = bin().env("TILEFORGE_THREADS", "0").args(["padic", "eval", "--p", "3", "--from", "0", "--to", "1"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["padic", "eval", "--p", "4", "--from", "0", "--to", "1"]).status.code(), Some(2));
    assert_eq!(run(&["sudoku", "verify", "--board", "/nonexistent/board"]).status.code(), Some(2));
    assert_eq!(run(&["sudoku", "gen", "--p", "5", "--a", "0", "--b", "1", "--c", "0", "--window", "9:1"]).status.code(), Some(2));
}
