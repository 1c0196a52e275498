//! Throughput of the Monte-Carlo engine: rayon-chunked vs single-threaded.
//!
//! Both paths draw identical per-trial streams, so this measures pure
//! scheduling overhead/speedup at a fixed trial budget. The assertion up
//! front is the determinism contract the speedup is not allowed to break.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use fdharq::channel::RedrawPolicy;
use fdharq::config::{db_to_lin, SystemParams};
use fdharq::montecarlo::{estimate_outage, estimate_outage_serial, DecodeCriterion, Scheme};

fn operating_point() -> SystemParams {
    let mut p = SystemParams::default();
    p.p_s = db_to_lin(5.0);
    p.p_r = p.p_s;
    p.var_sd = db_to_lin(5.0);
    p.var_sr = db_to_lin(10.0);
    p.var_rd = db_to_lin(10.0);
    p.var_rr = db_to_lin(-10.0);
    p
}

fn bench_backends(c: &mut Criterion) {
    const TRIALS: u64 = 500_000;
    const SEED: u64 = 1;
    let p = operating_point();

    let par = estimate_outage(
        &p,
        Scheme::Enhanced,
        TRIALS,
        SEED,
        RedrawPolicy::Reuse,
        DecodeCriterion::BlockSinr,
    );
    let ser = estimate_outage_serial(
        &p,
        Scheme::Enhanced,
        TRIALS,
        SEED,
        RedrawPolicy::Reuse,
        DecodeCriterion::BlockSinr,
    );
    assert_eq!(
        par.n_failures, ser.n_failures,
        "parallel and serial runs must count identically"
    );

    let mut g = c.benchmark_group("enhanced_outage");
    g.throughput(Throughput::Elements(TRIALS));
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("parallel", TRIALS), |b| {
        b.iter(|| {
            estimate_outage(
                &p,
                Scheme::Enhanced,
                TRIALS,
                SEED,
                RedrawPolicy::Reuse,
                DecodeCriterion::BlockSinr,
            )
        })
    });
    g.bench_function(BenchmarkId::new("serial", TRIALS), |b| {
        b.iter(|| {
            estimate_outage_serial(
                &p,
                Scheme::Enhanced,
                TRIALS,
                SEED,
                RedrawPolicy::Reuse,
                DecodeCriterion::BlockSinr,
            )
        })
    });
    g.finish();
}

criterion_group!(benches, bench_backends);
criterion_main!(benches);
