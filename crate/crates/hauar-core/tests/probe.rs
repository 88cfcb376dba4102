//! Temporary measurement probe; replaced by the real integration suite.

use hauar_core::eval::evaluate;
use hauar_core::frame::{load_pgm, preprocess};
use hauar_core::pipeline::ModelBundle;
use hauar_core::pose::{classify_roi, extract_pose_feature, PoseLabel};
use hauar_core::synth::{generate_dataset, DatasetManifest, Difficulty, LabelCounts};
use hauar_core::train::train;
use hauar_core::vision::{detect_people, segment_rois, Rect, RoiSegment};
use std::path::Path;

fn diagnose(manifest: &DatasetManifest, dir: &Path, bundle: &ModelBundle, max_dumps: usize) {
    let mut dumped = 0;
    for entry in manifest.entries() {
        if dumped >= max_dumps {
            break;
        }
        let bytes = std::fs::read(dir.join(&entry.path)).unwrap();
        let frame = load_pgm(&bytes).unwrap();
        let analysis = hauar_core::analyze_frame(&frame, bundle);
        if analysis.label == entry.label {
            continue;
        }
        dumped += 1;
        println!("== {} truth={} pred={}", entry.path, entry.label, analysis.label);
        let prepared = preprocess(&frame, &bundle.preprocess);
        let dets = detect_people(&prepared, &bundle.detector);
        println!("   detections: {:?}", dets.iter().map(|d| (d.bbox, (d.score * 100.0).round() / 100.0)).collect::<Vec<_>>());
        let whole = RoiSegment {
            crop: prepared.clone(),
            bbox: Rect::new(0, 0, prepared.width(), prepared.height()),
        };
        let segs = segment_rois(&prepared, &dets);
        for (name, seg) in std::iter::once(("whole", &whole))
            .chain(segs.iter().map(|s| ("crop", s)))
        {
            let f = extract_pose_feature(seg).unwrap();
            let (vote, d) = classify_roi(&bundle.pose, &f).unwrap();
            let dists: Vec<f64> = (0..4)
                .map(|k| {
                    bundle.pose.centroids[k]
                        .iter()
                        .zip(f.values())
                        .map(|(c, v)| (c - v) * (c - v))
                        .sum::<f64>()
                        .sqrt()
                })
                .map(|d| (d * 100.0).round() / 100.0)
                .collect();
            println!(
                "   {name} bbox={:?} vote={vote} d={d:.2} dists(E,Si,St,L)={dists:?} la={:.2} fill={:.2}",
                seg.bbox,
                f.values()[f.len() - 16],
                f.values()[f.len() - 8],
            );
        }
    }
}

#[test]
#[ignore]
fn probe_accuracy() {
    let train_dir = tempfile::tempdir().unwrap();
    let clean_dir = tempfile::tempdir().unwrap();
    let noisy_dir = tempfile::tempdir().unwrap();

    let train_counts = LabelCounts { empty: 80, sit: 120, stand: 120, lie: 120 };
    let test_counts = LabelCounts { empty: 150, sit: 275, stand: 275, lie: 275 };

    let train_manifest =
        generate_dataset(&train_counts, Difficulty::Clean, 1000, train_dir.path()).unwrap();
    let clean_manifest =
        generate_dataset(&test_counts, Difficulty::Clean, 2000, clean_dir.path()).unwrap();
    let noisy_manifest =
        generate_dataset(&test_counts, Difficulty::Noisy, 3000, noisy_dir.path()).unwrap();

    let bundle = train(&train_manifest, train_dir.path()).unwrap();

    let clean_report = evaluate(&clean_manifest, clean_dir.path(), &bundle).unwrap();
    println!("clean accuracy = {:.4}", clean_report.accuracy);
    println!("{}", clean_report.render_table());
    diagnose(&clean_manifest, clean_dir.path(), &bundle, 8);

    let noisy_report = evaluate(&noisy_manifest, noisy_dir.path(), &bundle).unwrap();
    println!("noisy accuracy = {:.4}", noisy_report.accuracy);
    println!("{}", noisy_report.render_table());
    diagnose(&noisy_manifest, noisy_dir.path(), &bundle, 8);
}
