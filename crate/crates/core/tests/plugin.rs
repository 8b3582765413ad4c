mod common;

use std::time::{Duration, Instant};

use plasticity_harness::domain::{Matrix, NormStats};
use plasticity_harness::metrics::evaluate;
use plasticity_harness::models::{init_params, ForecasterSpec, NativeForecaster};
use plasticity_harness::plugin::{PluginDescriptor, PluginSession, RemoteForecaster};
use plasticity_harness::training::TrainConfig;
use plasticity_harness::Error;

const ECHO: &str = env!("CARGO_BIN_EXE_plasticity-echo-plugin");

fn echo(args: &[&str]) -> PluginDescriptor {
    let mut d = PluginDescriptor::new(ECHO, args.iter().map(|s| s.to_string()).collect());
    d.timeout_ms = 2_000;
    d
}

fn last_row_context(values: &[f64]) -> Matrix {
    let mut rows = vec![vec![0.0; values.len()]; 3];
    rows[2] = values.to_vec();
    Matrix::from_rows(&rows).unwrap()
}

#[test]
fn handshake_reports_capabilities() {
    let session = PluginSession::open(&echo(&["--kind", "bias"])).unwrap();
    let caps = session.capabilities();
    assert!(caps.trainable);
    assert_eq!(caps.max_horizon, 96);
    session.shutdown().unwrap();
}

#[test]
fn version_mismatch_fails_closed() {
    let err = PluginSession::open(&echo(&["--version", "99"])).err().unwrap();
    assert!(err.to_string().contains("protocol version 99"), "{err}");
}

#[test]
fn naive_plugin_repeats_last_row() {
    let mut session = PluginSession::open(&echo(&[])).unwrap();
    let x = last_row_context(&[1.5]);
    let y = session.predict(&[&x], 4).unwrap();
    assert_eq!(y[0].as_slice(), &[1.5; 4]);
    let x2 = last_row_context(&[2.0, -1.0]);
    let y2 = session.predict(&[&x2], 2).unwrap();
    assert_eq!(y2[0].as_slice(), &[2.0, -1.0, 2.0, -1.0]);
    session.shutdown().unwrap();
}

#[test]
fn horizon_over_the_declared_limit_is_refused_before_dispatch() {
    let mut session = PluginSession::open(&echo(&["--max-horizon", "64"])).unwrap();
    let x = last_row_context(&[1.0]);
    let err = session.predict(&[&x], 96).unwrap_err().to_string();
    assert!(err.contains("horizon exceeds plugin limit"), "{err}");
    // refusal happens harness-side; the session stays usable
    assert!(!session.is_poisoned());
    assert_eq!(session.predict(&[&x], 64).unwrap()[0].rows(), 64);
}

#[test]
fn snapshot_finetune_restore_is_bitwise() {
    let mut session = PluginSession::open(&echo(&["--kind", "bias"])).unwrap();
    let mut rng = common::rng(1);
    let windows: Vec<_> = (0..300).map(|_| common::random_window(&mut rng, 5, 3, 2)).collect();
    let refs: Vec<_> = windows.iter().collect();
    let contexts: Vec<&Matrix> = windows.iter().take(10).map(|w| &w.context).collect();
    let before = session.predict(&contexts, 3).unwrap();
    let token = session.snapshot("before").unwrap();
    session.finetune(&refs, &TrainConfig::default()).unwrap();
    let tuned = session.predict(&contexts, 3).unwrap();
    assert_ne!(before, tuned);
    session.restore(&token).unwrap();
    let after = session.predict(&contexts, 3).unwrap();
    for (a, b) in before.iter().zip(&after) {
        let bits = |m: &Matrix| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(a), bits(b));
    }
}

#[test]
fn finetune_on_untrainable_plugin_is_refused() {
    let mut session = PluginSession::open(&echo(&[])).unwrap();
    let mut rng = common::rng(2);
    let w = common::random_window(&mut rng, 3, 1, 1);
    assert!(matches!(session.finetune(&[&w], &TrainConfig::default()), Err(Error::NotTrainable)));
}

fn assert_poisoned(mode: &str, expect: &str) {
    let mut session = PluginSession::open(&echo(&["--misbehave", mode])).unwrap();
    let x = last_row_context(&[1.0]);
    let err = session.predict(&[&x], 2).unwrap_err().to_string();
    assert!(err.contains(expect), "{mode}: {err}");
    assert!(session.is_poisoned(), "{mode}");
    let again = session.predict(&[&x], 2).unwrap_err().to_string();
    assert!(again.contains("poisoned"), "{again}");
}

#[test]
fn malformed_reply_poisons_the_session() {
    assert_poisoned("malformed", "");
}

#[test]
fn wrong_reply_id_poisons_the_session() {
    assert_poisoned("wrong-id", "does not answer request id");
}

#[test]
fn crash_is_reported_with_stderr() {
    assert_poisoned("die", "simulated crash");
}

#[test]
fn hang_times_out() {
    let clock = Instant::now();
    let mut d = echo(&["--misbehave", "hang"]);
    d.timeout_ms = 300;
    let mut session = PluginSession::open(&d).unwrap();
    let x = last_row_context(&[1.0]);
    let err = session.predict(&[&x], 2).unwrap_err();
    assert!(matches!(err, Error::PluginTimeout(..)), "{err}");
    assert!(clock.elapsed() < Duration::from_secs(5));
    assert!(session.is_poisoned());
}

#[test]
fn nan_forecast_is_not_accepted() {
    let mut session = PluginSession::open(&echo(&["--misbehave", "nan"])).unwrap();
    let mut rng = common::rng(3);
    let windows: Vec<_> = (0..4).map(|_| common::random_window(&mut rng, 3, 2, 1)).collect();
    let mut remote = RemoteForecaster {
        session: &mut session,
        horizon: 2,
    };
    assert!(evaluate(&mut remote, &windows, &NormStats::identity(1)).is_err());
}

#[test]
fn missing_executable_is_a_plugin_error() {
    let d = PluginDescriptor::new("/nonexistent/plugin", Vec::new());
    assert!(matches!(PluginSession::open(&d), Err(Error::Plugin(_))));
}

#[test]
fn remote_naive_matches_native_naive_bitwise() {
    let mut rng = common::rng(4);
    let windows: Vec<_> = (0..50).map(|_| common::random_window(&mut rng, 6, 3, 2)).collect();
    let stats = NormStats {
        mean: vec![1.0, -2.0],
        std: vec![0.5, 3.0],
    };
    let ckpt = init_params(&ForecasterSpec::naive(1, 6, 3, 2).unwrap(), 0).unwrap();
    let native = evaluate(&mut NativeForecaster::new(&ckpt), &windows, &stats).unwrap();
    let mut session = PluginSession::open(&echo(&[])).unwrap();
    let remote = evaluate(
        &mut RemoteForecaster {
            session: &mut session,
            horizon: 3,
        },
        &windows,
        &stats,
    )
    .unwrap();
    assert_eq!(native.mse.to_bits(), remote.mse.to_bits());
    assert_eq!(native.mse_raw.to_bits(), remote.mse_raw.to_bits());
}
