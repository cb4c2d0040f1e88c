use sympinv::reflengine::{census, CensusMode};

#[test]
fn class_search_covers_the_group() {
    let table = census(4, 5).unwrap();
    assert_eq!(table.meta.mode, CensusMode::ClassSearch);
    assert_eq!(table.meta.group_order, 9_360_000);
    assert_eq!(table.rows.iter().map(|r| r.class_size).sum::<u64>(), 9_360_000);
    assert_eq!(table.meta.involution_count, 652);
    println!("{}", table.to_text());
    assert_eq!(table.max_length(), Some(4));
}
