use std::fs;
use std::path::Path;

use pass_core::io::{read_dataset, read_manifest, read_tracks, write_dataset, write_tracks_file};
use pass_core::sim::generate_cohort;
use pass_core::sim::presets::{desk_scenarios, policy_family};
use pass_core::traj::Route;
use pass_core::{Error, TrajectoryRecord, VehicleTrack};

fn close9(a: f64, b: f64) -> bool {
    // Nine significant digits: half a unit in the ninth digit, relative.
    (a - b).abs() <= 5e-9 * a.abs().max(b.abs()) || (a - b).abs() < 1e-300
}

fn assert_tracks_close(mem: &VehicleTrack, disk: &VehicleTrack) {
    assert_eq!(mem.id(), disk.id());
    assert_eq!(mem.len(), disk.len(), "{}", mem.id());
    for (m, d) in mem.records().iter().zip(disk.records()) {
        assert_eq!(m.lane_id, d.lane_id);
        for (name, x, y) in [("time", m.time, d.time), ("s", m.s, d.s), ("speed", m.speed, d.speed), ("accel", m.accel, d.accel)] {
            assert!(close9(x, y), "{} {name}: {x} vs {y}", mem.id());
        }
    }
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn schema_row(result: pass_core::Result<Vec<VehicleTrack>>) -> usize {
    match result {
        Err(Error::Schema { row, .. }) => row,
        other => panic!("expected a schema error, got {other:?}"),
    }
}

#[test]
fn simulated_dataset_survives_disk() {
    let specs: Vec<_> = desk_scenarios().into_iter().take(2).collect();
    let data = generate_cohort(&specs, &policy_family(3, 7), 5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = write_dataset(&data, dir.path(), 5, Some("test")).unwrap();
    assert_eq!(read_manifest(dir.path()).unwrap(), written);

    let events = read_dataset(dir.path()).unwrap();
    assert_eq!(events.len(), data.events.len());
    for (disk, mem) in events.iter().zip(&data.events) {
        assert_eq!(disk.window.event_id, mem.spec.event_id);
        assert_eq!(disk.subjects.len(), mem.runs.len());
        for (subject, run) in disk.subjects.iter().zip(&mem.runs) {
            assert_tracks_close(&run.ego, &subject.ego);
            assert_eq!(subject.others.len(), run.others.len());
            for (m, d) in run.others.iter().zip(&subject.others) {
                assert_tracks_close(m, d);
            }
        }
    }
}

#[test]
fn reading_accepts_the_manifest_path_too() {
    let data = generate_cohort(&desk_scenarios()[..1], &policy_family(2, 7), 5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&data, dir.path(), 5, None).unwrap();
    let a = read_dataset(dir.path()).unwrap();
    let b = read_dataset(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn awkward_values_round_trip_to_nine_digits() {
    let values = [1.0 / 3.0, 123456.789012345, 1e-7 * 7.123456789, 2.0f64.sqrt() * 1e3, 0.0];
    let recs: Vec<TrajectoryRecord> = values
        .iter()
        .enumerate()
        .map(|(i, &x)| TrajectoryRecord {
            time: i as f64 * 0.1 + 1e-3 / 3.0,
            lane_id: i as i32 % 2,
            s: x,
            speed: x.abs(),
            accel: -x,
        })
        .collect();
    let track = VehicleTrack::new("v", recs).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    write_tracks_file(&path, &[&track]).unwrap();
    let back = read_tracks(&path, None).unwrap();
    assert_eq!(back.len(), 1);
    assert_tracks_close(&track, &back[0]);
}

#[test]
fn schema_errors_name_the_offending_row() {
    let dir = tempfile::tempdir().unwrap();
    let header = "vehicle_id,time,lane_id,s,speed,accel\n";
    let bad_header = write(dir.path(), "h.csv", "id,time,lane,s,speed,accel\na,0,0,0,0,0\n");
    assert_eq!(schema_row(read_tracks(&bad_header, None)), 1);

    let bad_number = write(dir.path(), "n.csv", &format!("{header}a,0,0,0,1,0\na,0.1,0,x,1,0\n"));
    assert_eq!(schema_row(read_tracks(&bad_number, None)), 3);

    let missing = write(dir.path(), "m.csv", &format!("{header}a,0,0,0,1,0\na,0.1,0,0.1,1,0\na,0.2,0\n"));
    assert_eq!(schema_row(read_tracks(&missing, None)), 4);

    let backwards = write(dir.path(), "b.csv", &format!("{header}a,0.2,0,0,1,0\na,0.1,0,0.1,1,0\n"));
    assert_eq!(schema_row(read_tracks(&backwards, None)), 3);

    let negative = write(dir.path(), "v.csv", &format!("{header}a,0,0,0,-1,0\n"));
    assert_eq!(schema_row(read_tracks(&negative, None)), 2);

    let empty = write(dir.path(), "e.csv", header);
    assert!(matches!(read_tracks(&empty, None), Err(Error::Schema { .. })));
}

#[test]
fn planar_positions_are_projected_onto_the_route() {
    // An L-shaped route: 100 m east, then 100 m north.
    let route = Route::new(vec![[0.0, 0.0], [100.0, 0.0], [100.0, 100.0]]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "p.csv",
        "vehicle_id,time,lane_id,x,y,speed,accel\n\
         a,0,0,10,1.5,5,0\n\
         a,1,0,99,0,5,0\n\
         a,2,1,98.5,40,5,0\n",
    );
    let tracks = read_tracks(&path, Some(&route)).unwrap();
    let s: Vec<f64> = tracks[0].records().iter().map(|r| r.s).collect();
    let expected = [10.0, 99.0, 140.0];
    for (got, want) in s.iter().zip(expected) {
        assert!((got - want).abs() < 1e-9, "{s:?}");
    }
    // Without a route the planar layout is rejected at the header.
    assert_eq!(schema_row(read_tracks(&path, None)), 1);
    // Far off the route is rejected at its row.
    let off = write(dir.path(), "o.csv", "vehicle_id,time,lane_id,x,y,speed,accel\na,0,0,50,60,5,0\n");
    assert_eq!(schema_row(read_tracks(&off, Some(&route))), 2);
}

#[test]
fn tracks_keep_order_of_first_appearance() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "o.csv",
        "vehicle_id,time,lane_id,s,speed,accel\nz,0,0,0,1,0\na,0,0,5,1,0\nz,0.1,0,0.1,1,0\na,0.1,0,5.1,1,0\n",
    );
    let ids: Vec<String> = read_tracks(&path, None).unwrap().iter().map(|t| t.id().to_string()).collect();
    assert_eq!(ids, ["z", "a"]);
}

#[test]
fn missing_manifest_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(read_dataset(dir.path()), Err(Error::Config(_))));
}
