//! Each example runs end to end at a reduced size.

#[allow(dead_code)]
#[path = "../examples/recover_random.rs"]
mod recover_random;
#[allow(dead_code)]
#[path = "../examples/masked_dft.rs"]
mod masked_dft;
#[allow(dead_code)]
#[path = "../examples/tv_image.rs"]
mod tv_image;
#[allow(dead_code)]
#[path = "../examples/surrogate_curve.rs"]
mod surrogate_curve;
#[allow(dead_code)]
#[path = "../examples/nrmse_trace.rs"]
mod nrmse_trace;
#[allow(dead_code)]
#[path = "../examples/sweep.rs"]
mod sweep;

#[test]
fn recover_random_example() {
    assert!(recover_random::run(1).unwrap() < 0.1);
}

#[test]
fn masked_dft_example() {
    for (_, err) in masked_dft::run(16, 8).unwrap() {
        assert!(err < 0.2);
    }
}

#[test]
fn tv_image_example() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("crop.pgm");
    assert!(tv_image::run(12, Some(path.clone())).unwrap() < 0.5);
    assert!(path.exists());
}

#[test]
fn surrogate_curve_example() {
    let rows = surrogate_curve::run(41).unwrap();
    assert!(rows.iter().all(|(_, f, g)| g >= f));
    let (_, f, g) = rows.iter().find(|(x, _, _)| (x - 4.0).abs() < 1e-12).unwrap();
    assert!((f - g).abs() < 1e-9 * f.abs());
}

#[test]
fn nrmse_trace_example() {
    let records = nrmse_trace::run(0.0).unwrap();
    assert!(records.windows(2).all(|w| w[1].0 <= w[0].0 + 1e-9 * (1.0 + w[0].0.abs())));
    assert!(records.last().unwrap().1 < records[0].1);
}

#[test]
fn sweep_example() {
    let dir = tempfile::tempdir().unwrap();
    let summary = sweep::run(3, Some(dir.path().join("s.csv"))).unwrap();
    assert_eq!(summary.len(), 4);
    assert!(dir.path().join("s_summary.csv").exists());
}
