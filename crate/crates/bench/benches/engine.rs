use std::hint::black_box;
use std::path::Path;

use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;

use evatrap::config::{AxisSpec, Simulation, SimulationDocument};
use evatrap::constants::wavelength_to_omega;
use evatrap::fields::{Axis, Direction, NanofiberMode, NanofiberSpec};
use evatrap::polarizability::{polarizabilities, PolarizabilityOptions};
use evatrap::surfaces::c3_coefficient;
use evatrap::{stark_hamiltonian, AtomicSystem, HalfInt, Material, StateSpec, TrapOptions};

fn line_document(points: usize) -> (SimulationDocument, std::path::PathBuf) {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let text = std::fs::read_to_string(dir.join("nanofiber-uncompensated-line.json")).unwrap();
    let mut doc: SimulationDocument = serde_json::from_str(&text).unwrap();
    doc.grid.x = AxisSpec::Range {
        min: 2.6e-7,
        max: 1.26e-6,
        points,
    };
    (doc, dir)
}

fn atomic(c: &mut Criterion) {
    let system = AtomicSystem::cesium(StateSpec::new(6, 0, 0.5, 4.0).unwrap()).unwrap();
    let excited = StateSpec::new(6, 1, 1.5, 5.0).unwrap();
    let (level, f) = system.resolve(excited).unwrap();
    let omega = wavelength_to_omega(1064e-9);
    c.bench_function("polarizabilities 6P3/2 F=5", |b| {
        b.iter(|| polarizabilities(&system, level, f, black_box(omega), PolarizabilityOptions::default()).unwrap())
    });
    let pol = polarizabilities(&system, level, f, omega, PolarizabilityOptions::default()).unwrap();
    let e = [Complex64::new(3e5, 0.0), Complex64::new(0.0, 1e5), Complex64::new(2e4, 1e4)];
    c.bench_function("stark hamiltonian and eigenvalues F=5", |b| {
        b.iter(|| stark_hamiltonian(&pol, black_box(&e), [0.0, 0.0, 1.0]).unwrap().eigenvalues())
    });
    let j = [4, 4, 1, 2, 3, 2].map(HalfInt::from_int);
    c.bench_function("wigner 6j", |b| b.iter(|| evatrap::wigner6j(black_box(j)).unwrap()));
    let silica = Material::builtin("SiO2").unwrap();
    c.bench_function("C3 silica", |b| b.iter(|| c3_coefficient(&system, 0, black_box(&silica)).unwrap()));
}

fn fields(c: &mut Criterion) {
    let spec = NanofiberSpec {
        radius: 250e-9,
        n_core: 1.4496,
        n_clad: 1.0,
        wavelength: 1064e-9,
        polarization_angle: 0.0,
        direction: Direction::Forward(Axis::Z),
        power: 1e-3,
    };
    c.bench_function("nanofiber mode solve", |b| b.iter(|| NanofiberMode::solve(black_box(spec)).unwrap()));
}

fn engine(c: &mut Criterion) {
    let (doc, dir) = line_document(500);
    let sim = Simulation::from_document(doc, &dir).unwrap();
    let serial = TrapOptions {
        threads: Some(1),
        ..TrapOptions::default()
    };
    c.bench_function("model build, 500-point line", |b| b.iter(|| sim.model(serial).unwrap()));
    let model = sim.model(serial).unwrap();
    let powers = sim.member_powers(&[2.2e-3, 2.5e-2]).unwrap();
    c.bench_function("power update, 500-point line, F=4", |b| {
        b.iter(|| model.evaluate(black_box(&powers)).unwrap())
    });
}

criterion_group!(benches, atomic, fields, engine);
criterion_main!(benches);
