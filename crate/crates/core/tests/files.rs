use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use subtour::graphgen::Mode;
use subtour::io::{compare_lists, compare_point_lists, format_points, parse_points, read_points, write_points, IoError, PointList};
use subtour::pipeline::{points_file_name, report_file_name, run, EnumerationReport, RunConfig};

/// A run to n = 8 with gaps, written to a temporary directory.
fn run8() -> &'static (tempfile::TempDir, EnumerationReport) {
    static CELL: OnceLock<(tempfile::TempDir, EnumerationReport)> = OnceLock::new();
    CELL.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let mut config = RunConfig::new(8, Mode::General);
        config.output_dir = Some(dir.path().to_path_buf());
        config.write_certificates = true;
        let report = run(&config).unwrap();
        (dir, report)
    })
}

fn q8() -> PointList {
    read_points(&run8().0.path().join(points_file_name(8, Mode::General))).unwrap()
}

#[test]
fn report_matches_files() {
    let (dir, report) = run8();
    let totals: Vec<usize> = report.rows.iter().map(|r| r.total).collect();
    assert_eq!(totals, vec![1, 1, 1, 2, 3, 13]);
    let gaps: Vec<&str> = report.rows.iter().map(|r| r.max_gap.as_deref().unwrap()).collect();
    assert_eq!(gaps, vec!["1/1", "1/1", "1/1", "10/9", "9/8", "8/7"]);
    for row in &report.rows {
        assert_eq!(row.total, row.step2_classes + row.step3_classes);
        let list = read_points(&dir.path().join(points_file_name(row.n, Mode::General))).unwrap();
        assert_eq!(list.points.len(), row.total);
    }
    let json = std::fs::read_to_string(dir.path().join(report_file_name(Mode::General))).unwrap();
    let parsed: EnumerationReport = serde_json::from_str(&json).unwrap();
    assert_eq!(&parsed, report);
}

#[test]
fn point_file_round_trip_is_exact() {
    let list = q8();
    assert_eq!(list.points.len(), 13);
    let text = format_points(&list);
    assert_eq!(parse_points(&text).unwrap(), list);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("copy.txt");
    write_points(&list, &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
    assert!(text.is_ascii() && !text.contains('\r'));
}

#[test]
fn compare_detects_missing_points() {
    let list = q8();
    assert_eq!(compare_point_lists(&list, &list).unwrap().missing_in_a.len(), 0);
    let mut fewer = list.clone();
    let dropped = fewer.points.remove(5);
    let c = compare_point_lists(&list, &fewer).unwrap();
    assert!(c.missing_in_a.is_empty());
    assert_eq!(c.missing_in_b, vec![dropped.id]);
}

#[test]
fn compare_ignores_labels_and_order() {
    let list = q8();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut shuffled = list.clone();
    shuffled.points.shuffle(&mut rng);
    for rec in &mut shuffled.points {
        let mut perm: Vec<usize> = (0..8).collect();
        perm.shuffle(&mut rng);
        rec.point = rec.point.relabel(&perm);
    }
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.txt"), dir.path().join("b.txt"));
    write_points(&list, &a).unwrap();
    write_points(&shuffled, &b).unwrap();
    let c = compare_lists(&a, &b).unwrap();
    assert!(c.missing_in_a.is_empty() && c.missing_in_b.is_empty());
}

#[test]
fn compare_rejects_different_n_or_mode() {
    let list = q8();
    let mut other = list.clone();
    other.mode = Mode::HalfIntegral;
    assert!(matches!(compare_point_lists(&list, &other), Err(IoError::Mismatch(..))));
    let seven = PointList::new(7, Mode::General);
    assert!(compare_point_lists(&list, &seven).is_err());
}

#[test]
fn malformed_files_report_the_line() {
    let text = format_points(&q8());
    let lines: Vec<&str> = text.lines().collect();
    let bad_line = lines.iter().position(|l| l.ends_with(" 1/2")).unwrap();
    let mut broken: Vec<String> = lines.iter().map(|s| s.to_string()).collect();
    broken[bad_line] = broken[bad_line].replace(" 1/2", " 2/4");
    match parse_points(&(broken.join("\n") + "\n")) {
        Err(IoError::Parse { line, .. }) => assert_eq!(line, bad_line + 1),
        other => panic!("expected a parse error, got {other:?}"),
    }
    assert!(matches!(parse_points("# other\n"), Err(IoError::Parse { line: 1, .. })));
    let mut swapped: Vec<String> = lines.iter().map(|s| s.to_string()).collect();
    swapped[3] = "1 0 1/1".into();
    assert!(parse_points(&(swapped.join("\n") + "\n")).is_err());
}

#[test]
fn certificates_are_written() {
    let (dir, _) = run8();
    let text = std::fs::read_to_string(dir.path().join("certificates-n08-general.txt")).unwrap();
    let certs = subtour::io::parse_certificates(&text).unwrap();
    assert_eq!(certs.len(), 13);
    for (_, c) in &certs {
        subtour::gap::verify_certificate(c).unwrap();
    }
}
