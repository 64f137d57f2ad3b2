use std::path::Path;
use std::process::{Command, Output};

fn netcontest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netcontest")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn netvalue_on_a_path() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "path.txt", "# path\n3\n0 1\n1 2\n");
    let values = write(dir.path(), "w.txt", "3\n0\n0\n");
    let out = netcontest(&["netvalue", "--graph", &graph, "--values", &values, "--t", "1"]);
    assert!(out.status.success());
    // Node 0 has the single neighbour 1, so all of its value moves there.
    assert_eq!(stdout(&out), "0\n3\n0\n");
    assert!(String::from_utf8_lossy(&out.stderr).contains("sum_v"));
}

#[test]
fn out_of_range_edge_exits_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "g.txt", "3\n0 1\n1 7\n");
    let values = write(dir.path(), "w.txt", "1\n1\n1\n");
    let out = netcontest(&["netvalue", "--graph", &graph, "--values", &values]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn single_run_simulation_reports_missing_spread() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "g.txt", "2\n0 1\n");
    let ones = write(dir.path(), "ones.txt", "1\n1\n");
    let out = netcontest(&[
        "simulate", "--graph", &graph, "--values", &ones, "--alloc-d", &ones, "--alloc-a", &ones,
        "--runs", "1", "--player", "attacker",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("stderr: 0 (insufficient runs)"), "{text}");
    assert!(text.contains("player: A"));
}

#[test]
fn oracle_refuses_large_games() {
    let dir = tempfile::tempdir().unwrap();
    let game = write(dir.path(), "g.game", "B_D = 1\nB_A = 1\nv_D = 1, 2, 3, 4\nv_A = 4, 3, 2, 1\n");
    let out = netcontest(&["solve", "--config", &game, "--method", "oracle"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn game_values_can_come_from_files() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "vd.txt", "2\n4\n");
    write(dir.path(), "va.txt", "1\n2\n");
    let game = write(dir.path(), "g.game", "B_D = 3\nB_A = 1\nv_D_file = vd.txt\nv_A_file = va.txt\n");
    let out = netcontest(&["solve", "--config", &game]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("method: closed-form-proportional"), "{text}");
    assert!(text.contains("x_D: 1.000000000000 2.000000000000"), "{text}");
}

#[test]
fn sweep_csv_has_header_and_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.cfg", "m = 3\nv = 10\nB_A = 6\nB_D = 3, 12\ndelta = 0, 0.5\n");
    let out = netcontest(&["sweep", "--config", &cfg]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], netcontest::experiments::CSV_HEADER);
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("0,0.5xB_A,3,"), "{}", lines[1]);
    assert!(lines[4].starts_with("0.5,2xB_A,12,"), "{}", lines[4]);
}
