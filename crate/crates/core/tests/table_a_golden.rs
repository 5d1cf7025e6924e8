use wce_bridge::experiment::{table_a_csv, ExperimentConfig};
use wce_bridge::{enumerate_full, enumerate_table_a};

fn body(p: u32, l: usize) -> String {
    let meta = ExperimentConfig::default().meta().unwrap();
    let mut buf = Vec::new();
    table_a_csv(&mut buf, &meta, p, l).unwrap();
    String::from_utf8(buf)
        .unwrap()
        .lines()
        .filter(|line| !line.starts_with('#'))
        .map(|line| format!("{line}\n"))
        .collect()
}

#[test]
fn matches_reference_rows() {
    let golden = include_str!("data/table_a_L3_p12.csv");
    assert_eq!(body(12, 3), golden);
}

#[test]
fn order_bound_truncates_the_tail() {
    let golden: Vec<&str> = include_str!("data/table_a_L3_p12.csv").lines().collect();
    let want: Vec<&str> = golden
        .iter()
        .copied()
        .filter(|row| row.starts_with("index") || row.rsplit(',').next().unwrap().parse::<u32>().unwrap() <= 4)
        .collect();
    let got = body(4, 3);
    let got: Vec<&str> = got.lines().collect();
    // Row numbers restart, so compare the multi-index columns only.
    let strip = |r: &str| r.split_once(',').unwrap().1.to_string();
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(&want).skip(1) {
        assert_eq!(strip(g), strip(w));
    }
}

#[test]
fn subset_of_full_enumeration() {
    for (p, l) in [(12, 3), (3, 5), (4, 2), (2, 1)] {
        let table = enumerate_table_a(p, l);
        let full = enumerate_full(p, l, 1_000_000).unwrap();
        for m in table.iter() {
            assert!(full.position(m).is_some(), "{m} missing from full set (p={p}, L={l})");
        }
    }
}

#[test]
fn wide_tables_cap_columns_at_sixteen() {
    let text = body(12, 40);
    let header = text.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 18);
    assert_eq!(text.lines().count(), 1 + 1 + 40 + 24);
}
