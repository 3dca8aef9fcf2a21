use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use chamberline::parallel::Execution;
use chamberline::sweep::{
    pulse_sweep, random_records, round_trip_failures, temperature_sweep, undetected_bit_flips,
    PulseSweep, PULSE_SWEEP_BPMS,
};
use chamberline::vitals::{DEFAULT_PULSE_FS_HZ, DEFAULT_VREF_MV};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn temperature(c: &mut Criterion) {
    let mut g = c.benchmark_group("temperature_sweep");
    for (name, exec) in MODES {
        g.bench_function(name, |b| {
            b.iter(|| temperature_sweep(exec, DEFAULT_VREF_MV, 1, black_box(7)))
        });
    }
    g.finish();
}

fn pulse(c: &mut Criterion) {
    let mut g = c.benchmark_group("pulse_sweep_120");
    g.sample_size(20);
    let sweep = PulseSweep {
        bpms: &PULSE_SWEEP_BPMS,
        seeds: 20,
        noise: 0.05,
        fs_hz: DEFAULT_PULSE_FS_HZ,
    };
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| pulse_sweep(exec, black_box(sweep))));
    }
    g.finish();
}

fn codec(c: &mut Criterion) {
    let mut g = c.benchmark_group("codec");
    g.sample_size(20);
    for n in [1_000usize, 10_000] {
        let records = random_records(n, 42);
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(format!("round_trip/{name}"), n), &records, |b, r| {
                b.iter(|| round_trip_failures(exec, r))
            });
        }
    }
    let records = random_records(1_000, 43);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new(format!("bit_flips/{name}"), 1_000), &records, |b, r| {
            b.iter(|| undetected_bit_flips(exec, r))
        });
    }
    g.finish();
}

criterion_group!(benches, temperature, pulse, codec);
criterion_main!(benches);
