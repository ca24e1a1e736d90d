mod common;

use tempinf::baselines::PopularityWindow;
use tempinf::ArtistId;

#[test]
fn incremental_window_equals_recount() {
    for seed in 0..100 {
        if let Err(e) = common::check_popularity_stream(seed, 10_000) {
            panic!("{e}");
        }
    }
}

#[test]
fn advancing_without_events_expires_everything() {
    let mut w = PopularityWindow::new(10);
    w.advance(0);
    w.observe(ArtistId(3), 0);
    w.advance(9);
    assert_eq!(w.count(ArtistId(3)), 1);
    w.advance(10);
    assert_eq!(w.count(ArtistId(3)), 0);
    assert!(w.recommend(5).is_empty());
}
