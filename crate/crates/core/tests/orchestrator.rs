use std::collections::BTreeMap;

use twinforge::analytics::Segmentation;
use twinforge::archive::{Archive, ArchiveEntry, Tags, WindowQuery};
use twinforge::orchestrator::{
    build_timeline, emit_augmentation_event, flag_anomalies, run_replica, AugmentationOutcome,
    HyperParams, OrchestratorError, ReplicaContext, StageError, ZeroConf,
};
use twinforge::physical::{simulate_scenario, Channel, ScenarioSpec};
use twinforge::readiness::{FeatureSeries, ReadinessError};
use twinforge::twin::{EventKind, LifecycleEvent, TwinRegistry};

fn window(seed: u64, machine: &str) -> Vec<ArchiveEntry> {
    let (stream, _) = simulate_scenario(&ScenarioSpec::microfactory(seed, 120.0)).unwrap();
    let archive = Archive::new();
    archive.append_batch(
        stream
            .filter(|s| s.asset_id == machine)
            .map(|s| (s, Tags::new())),
    );
    archive
        .query_window(&WindowQuery::new(machine, 0, i64::MAX).channels(Channel::ACCEL))
        .unwrap()
}

fn ctx(asset: &str) -> ReplicaContext {
    ReplicaContext {
        asset_id: asset.into(),
        seed: 42,
        seq: 1,
        rarity_threshold: 0.05,
    }
}

#[test]
fn three_phase_window_gives_three_segments() {
    let w = window(6, "oven-1");
    let hp = HyperParams {
        penalty: 40.0,
        k: 3,
        ..HyperParams::default()
    };
    let run = run_replica(&w, &hp, &ctx("oven-1")).unwrap();
    assert_eq!(run.result.segment_count, 3);
    assert!((-1.0..=1.0).contains(&run.result.silhouette));
    assert_eq!(run.result.anomaly_count, 0);

    let again = run_replica(&w, &hp, &ctx("oven-1")).unwrap();
    assert_eq!(again.result, run.result);
    assert_eq!(again.result.replica_version, run.result.replica_version);
}

#[test]
fn missing_axis_is_tagged_with_version() {
    let w: Vec<ArchiveEntry> = window(6, "oven-1")
        .into_iter()
        .filter(|e| e.sample.channel != Channel::AccelZ)
        .collect();
    let hp = HyperParams::default();
    match run_replica(&w, &hp, &ctx("oven-1")) {
        Err(OrchestratorError::Stage {
            replica_version,
            source,
        }) => {
            assert!(replica_version.starts_with("v1-"));
            assert!(matches!(
                source,
                StageError::Readiness(ReadinessError::AxisLengthMismatch { .. })
            ));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn replicas_leave_raw_samples_untouched() {
    let (stream, _) = simulate_scenario(&ScenarioSpec::microfactory(9, 60.0)).unwrap();
    let archive = Archive::new();
    archive.append_batch(stream.map(|s| (s, Tags::new())));
    let before: Vec<_> = archive.assets().iter().map(|a| archive.scan(a)).collect();
    let out = ZeroConf::new().run(&archive, "drill-1", None).unwrap();
    let after: Vec<_> = archive.assets().iter().map(|a| archive.scan(a)).collect();
    assert_eq!(before, after);
    assert_eq!(
        archive.replica_versions(),
        vec![out.report.selected.clone()]
    );
}

#[test]
fn ranking_is_total_and_anomalies_sound() {
    let (stream, _) = simulate_scenario(&ScenarioSpec::microfactory(14, 120.0)).unwrap();
    let archive = Archive::new();
    archive.append_batch(
        stream
            .filter(|s| s.asset_id == "drill-1")
            .map(|s| (s, Tags::new())),
    );
    let out = ZeroConf::new().run(&archive, "drill-1", None).unwrap();
    let mut versions: Vec<_> = out
        .report
        .results
        .iter()
        .map(|r| &r.replica_version)
        .collect();
    versions.sort();
    versions.dedup();
    assert_eq!(versions.len(), out.report.results.len());

    let records = archive.segments(&out.report.selected).unwrap();
    let total: usize = records
        .iter()
        .map(|r| r.block_range.1 - r.block_range.0)
        .sum();
    let mut per_cluster: BTreeMap<usize, usize> = BTreeMap::new();
    for r in &records {
        *per_cluster.entry(r.cluster_label).or_default() += r.block_range.1 - r.block_range.0;
    }
    for r in &records {
        let freq = per_cluster[&r.cluster_label] as f64 / total as f64;
        let flagged = out
            .anomalies
            .iter()
            .any(|a| a.segment_index == r.segment_index);
        assert_eq!(flagged, freq < 0.05, "segment {}", r.segment_index);
    }
    for a in &out.anomalies {
        assert!(a.rarity < 0.05);
    }

    // Rows tile [0, n).
    let rows = &out.timeline.rows;
    assert_eq!(rows[0].block_start, 0);
    assert_eq!(rows.last().unwrap().block_end, out.timeline.n_blocks);
    assert!(rows.windows(2).all(|w| w[0].block_end == w[1].block_start));
}

#[test]
fn timeline_single_row_without_change_points() {
    let w = window(2, "sorter-1");
    let run = run_replica(&w, &HyperParams::default(), &ctx("sorter-1")).unwrap();
    let features: FeatureSeries = run.features;
    let n = features.len();
    let seg = Segmentation {
        n,
        change_points: vec![],
        total_cost: 0.0,
    };
    let t = build_timeline(&features, &seg, &vec![0; n], &[]).unwrap();
    assert_eq!(t.rows.len(), 1);
    assert_eq!((t.rows[0].block_start, t.rows[0].block_end), (0, n));
    assert!(!t.rows[0].is_anomaly);
}

#[test]
fn repeated_anomalies_are_not_deduplicated() {
    let w = window(3, "drill-1");
    let run = run_replica(
        &w,
        &HyperParams {
            penalty: 10.0,
            k: 4,
            ..HyperParams::default()
        },
        &ctx("drill-1"),
    )
    .unwrap();
    let anomalies = flag_anomalies(&run.result.segments, 0.05).unwrap();
    assert_eq!(anomalies.len(), 1);

    let registry = TwinRegistry::new();
    let twin = registry.create_twin("drill-1", BTreeMap::new()).unwrap();
    twin.apply_lifecycle_event(LifecycleEvent::Bind).unwrap();
    twin.apply_lifecycle_event(LifecycleEvent::SyncEstablished)
        .unwrap();
    for _ in 0..2 {
        assert!(matches!(
            emit_augmentation_event(&twin, &anomalies[0]),
            AugmentationOutcome::Emitted { .. }
        ));
    }
    let events = twin.snapshot().state.events;
    assert_eq!(
        events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::AnomalyDetected(_)))
            .count(),
        2
    );
}
