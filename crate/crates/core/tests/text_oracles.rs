//! Stemmer and phonetic encoder against reference tables produced by
//! independent implementations (see the header line of each fixture).

use cmpos::text::{double_metaphone, porter_stem};

fn rows(text: &str) -> Vec<Vec<&str>> {
    text.lines()
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split('\t').collect())
        .collect()
}

#[test]
fn porter_matches_reference_table() {
    let table = rows(include_str!("fixtures/porter_reference.tsv"));
    assert!(table.len() >= 50);
    let misses: Vec<_> = table
        .iter()
        .filter(|r| porter_stem(r[0]) != r[1])
        .map(|r| format!("{} -> {} (expected {})", r[0], porter_stem(r[0]), r[1]))
        .collect();
    assert!(misses.is_empty(), "{misses:#?}");
}

#[test]
fn double_metaphone_matches_reference_table() {
    let table = rows(include_str!("fixtures/double_metaphone_reference.tsv"));
    assert!(table.len() >= 50);
    let misses: Vec<_> = table
        .iter()
        .filter(|r| double_metaphone(r[0]) != (r[1].to_string(), r[2].to_string()))
        .map(|r| format!("{} -> {:?} (expected {} {})", r[0], double_metaphone(r[0]), r[1], r[2]))
        .collect();
    assert!(misses.is_empty(), "{misses:#?}");
}
