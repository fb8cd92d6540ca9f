mod common;

use std::collections::BTreeSet;
use std::fs;

use proptest::prelude::*;

use voxmem::store::{
    doc_id_for, ExperienceStore, QueryFilter, StoreError, DOCS_FILE, INDEX_FILE, META_FILE, SUMMARIES_FILE,
};

fn fill(store: &mut ExperienceStore, n: usize, seed: u64) {
    let mut r = common::rng(seed);
    let mut clock = 0;
    for i in 0..n {
        store.append(common::random_tuple(&mut r, &format!("ep{}", i / 5), (i % 5) as u32 + 1, &mut clock)).unwrap();
    }
}

fn conserved(store: &ExperienceStore) -> bool {
    let rolled: usize = store.summaries().iter().map(|s| s.doc_count as usize).sum();
    let ids: BTreeSet<&String> = store.summaries().iter().flat_map(|s| &s.doc_ids).collect();
    rolled + store.live_count() == store.len()
        && ids.len() == rolled
        && ids.iter().all(|id| store.entry(id).is_some_and(|e| e.rolled_up))
}

#[test]
fn overflow_rolls_up_the_oldest_half() {
    let mut store = ExperienceStore::in_memory(256);
    fill(&mut store, 256, 4);
    assert!(store.summaries().is_empty());
    fill(&mut store, 44, 5);
    assert_eq!(store.len(), 300);
    assert_eq!(store.summaries().len(), 1);
    assert_eq!(store.summaries()[0].doc_count, 128);
    assert_eq!(store.live_count(), 172);
    assert!(conserved(&store));
}

#[test]
fn ids_are_sequential_and_resolve() {
    let mut store = ExperienceStore::in_memory(100);
    fill(&mut store, 12, 1);
    for (i, d) in store.documents().iter().enumerate() {
        assert_eq!(d.doc_id, doc_id_for(i as u64 + 1));
        assert_eq!(store.get_document(&d.doc_id).unwrap(), d);
        assert_eq!(store.entry(&d.doc_id).unwrap().timestamp, i as u64 + 1);
    }
    assert_eq!(store.next_doc_id(), "d_000013");
    assert!(matches!(store.get_document("d_000999"), Err(StoreError::NotFound(_))));
    assert!(matches!(store.get_document("nope"), Err(StoreError::NotFound(_))));
}

#[test]
fn invalid_tuples_are_refused() {
    let mut store = ExperienceStore::in_memory(8);
    let mut r = common::rng(2);
    let mut clock = 0;
    let mut t = common::random_tuple(&mut r, "e", 1, &mut clock);
    t.s_post.world_time = 0;
    t.s_pre.world_time = 5;
    assert!(matches!(store.append(t), Err(StoreError::Invalid(_))));
    assert!(store.is_empty());
}

#[test]
fn queries_need_filters_and_limits() {
    let mut store = ExperienceStore::in_memory(100);
    fill(&mut store, 40, 3);
    assert!(matches!(store.query(&QueryFilter::default(), 5), Err(StoreError::EmptyFilter)));
    let f = QueryFilter { outcome: Some(false), ..Default::default() };
    assert!(matches!(store.query(&f, 0), Err(StoreError::ZeroLimit)));
    let hits = store.query(&f, 5).unwrap();
    assert!(hits.len() <= 5 && hits.iter().all(|e| !e.outcome));
    assert!(hits.windows(2).all(|w| w[0].timestamp > w[1].timestamp));
}

#[test]
fn rolled_up_entries_leave_default_queries() {
    let mut store = ExperienceStore::in_memory(8);
    fill(&mut store, 40, 4);
    let all = QueryFilter { time_range: Some((0, u64::MAX)), ..Default::default() };
    assert_eq!(store.query(&all, 1000).unwrap().len(), store.live_count());
    let deep = QueryFilter { include_rolled_up: true, ..all };
    assert_eq!(store.query(&deep, 1000).unwrap().len(), 40);
}

#[test]
fn zero_window_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(matches!(ExperienceStore::open(tmp.path(), 0), Err(StoreError::ZeroWindow)));
    let mut store = ExperienceStore::in_memory(4);
    assert!(matches!(store.rollup(0), Err(StoreError::ZeroWindow)));
}

#[test]
fn persistence_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let mut store = ExperienceStore::open(tmp.path(), 10).unwrap();
    fill(&mut store, 57, 5);
    for f in [DOCS_FILE, INDEX_FILE, SUMMARIES_FILE, META_FILE] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
    let back = ExperienceStore::open(tmp.path(), 10).unwrap();
    assert_eq!(back.documents(), store.documents());
    assert_eq!(back.index(), store.index());
    assert_eq!(back.summaries(), store.summaries());
    assert!(conserved(&back));
}

#[test]
fn missing_index_tail_is_rebuilt() {
    let tmp = tempfile::tempdir().unwrap();
    let mut store = ExperienceStore::open(tmp.path(), 100).unwrap();
    fill(&mut store, 6, 6);
    let index_path = tmp.path().join(INDEX_FILE);
    let text = fs::read_to_string(&index_path).unwrap();
    let kept: String = text.lines().take(4).map(|l| format!("{l}\n")).collect();
    fs::write(&index_path, kept).unwrap();
    let back = ExperienceStore::open(tmp.path(), 100).unwrap();
    assert_eq!(back.index(), store.index());
    assert_eq!(fs::read_to_string(&index_path).unwrap(), text);
}

#[test]
fn corrupt_lines_are_reported_with_position() {
    let tmp = tempfile::tempdir().unwrap();
    let mut store = ExperienceStore::open(tmp.path(), 100).unwrap();
    fill(&mut store, 3, 7);
    let docs = tmp.path().join(DOCS_FILE);
    let mut text = fs::read_to_string(&docs).unwrap();
    text.push_str("{\"half\":\n");
    fs::write(&docs, text).unwrap();
    match ExperienceStore::open(tmp.path(), 100) {
        Err(StoreError::Corrupt { file, line, .. }) => assert_eq!((file.as_str(), line), (DOCS_FILE, 4)),
        other => panic!("expected corruption, got {other:?}"),
    }
}

#[test]
fn detached_copies_never_write() {
    let tmp = tempfile::tempdir().unwrap();
    let mut store = ExperienceStore::open(tmp.path(), 100).unwrap();
    fill(&mut store, 3, 8);
    let before = fs::read(tmp.path().join(DOCS_FILE)).unwrap();
    let mut scratch = store.detached();
    fill(&mut scratch, 5, 9);
    assert_eq!(scratch.len(), 8);
    assert!(scratch.dir().is_none());
    assert_eq!(fs::read(tmp.path().join(DOCS_FILE)).unwrap(), before);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn rollup_conserves_documents(n in 0usize..200, window in 1usize..40, seed in any::<u64>()) {
        let mut store = ExperienceStore::in_memory(window);
        fill(&mut store, n, seed);
        prop_assert!(store.live_count() <= window);
        prop_assert!(conserved(&store));
        for s in store.summaries() {
            prop_assert!(s.window_span.0 <= s.window_span.1);
            prop_assert!((0.0..=1.0).contains(&s.success_rate));
            prop_assert!(s.frequent_cond_sigs.len() <= 5);
        }
    }

    #[test]
    fn appends_only_extend_the_log(n in 1usize..40, extra in 1usize..20, seed in any::<u64>()) {
        let tmp = tempfile::tempdir().unwrap();
        let mut store = ExperienceStore::open(tmp.path(), 8).unwrap();
        fill(&mut store, n, seed);
        let before = fs::read(tmp.path().join(DOCS_FILE)).unwrap();
        let sums = fs::read(tmp.path().join(SUMMARIES_FILE)).unwrap_or_default();
        fill(&mut store, extra, seed ^ 1);
        let after = fs::read(tmp.path().join(DOCS_FILE)).unwrap();
        prop_assert!(after.starts_with(&before));
        prop_assert!(fs::read(tmp.path().join(SUMMARIES_FILE)).unwrap_or_default().starts_with(&sums));
    }
}
