//! Built-in invariant suites: the properties the model guarantees, checked
//! at runtime on freshly drawn random inputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use esfme::distortion::{hadamard4x4, satd4x4, satd8x8, Residual4x4};
use esfme::oracle;
use esfme::pixel::Plane;
use esfme::rate::mvd_bits;
use esfme::rate::MotionVector;
use esfme::schedule::{
    cu_size_set, cycle_count, simulate_ctu_cycles, task_order, zscan_index, SizeMode,
};
use esfme::surface::{fit_surface, fractional_refine, CostGrid3x3};

type Outcome = Result<String, String>;

fn random_grid(rng: &mut ChaCha8Rng) -> CostGrid3x3 {
    CostGrid3x3::from_fn(|_, _| rng.random_range(0..1u64 << 20))
}

fn surface_fit_oracle(grids: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..grids {
        let grid = random_grid(&mut rng);
        let p = fit_surface(&grid);
        let sol = oracle::fit_surface_float(&grid).map_err(|e| e.to_string())?;
        let pairs = [
            (p.p1 as f64 / 6.0, sol[0]),
            (p.p2 as f64 / 6.0, sol[1]),
            (p.p3 as f64 / 12.0, sol[2]),
            (p.p4 as f64 / 12.0, sol[3]),
            (p.p5 as f64 / 12.0, sol[4]),
        ];
        for (ours, oracle) in pairs {
            if (ours - oracle).abs() > 1e-9 * oracle.abs().max(1.0) {
                return Err(format!("grid {i}: integer fit {ours} vs float {oracle}"));
            }
        }
    }
    Ok(format!("{grids} grids, integer fit == float least squares"))
}

fn surface_refine_oracle(grids: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1);
    for i in 0..grids {
        let grid = random_grid(&mut rng);
        let a = fractional_refine(&grid);
        let b = oracle::fractional_refine_float(&grid, 3);
        if a != b {
            return Err(format!("grid {i}: {a:?} vs float {b:?}"));
        }
    }
    Ok(format!("{grids} grids, refine == float reference"))
}

fn surface_invariance(grids: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x2);
    for i in 0..grids {
        let grid = random_grid(&mut rng);
        let base = fractional_refine(&grid);
        let c = rng.random_range(0..1u64 << 20);
        let k = rng.random_range(1..=64u64);
        let shifted = CostGrid3x3::from_fn(|x, y| grid.get(x, y) + c);
        let scaled = CostGrid3x3::from_fn(|x, y| grid.get(x, y) * k);
        if fractional_refine(&shifted) != base {
            return Err(format!("grid {i}: shift by {c} changed the offset"));
        }
        if fractional_refine(&scaled) != base {
            return Err(format!("grid {i}: scale by {k} changed the offset"));
        }
        if fractional_refine(&grid.shifted_to_zero()) != base {
            return Err(format!("grid {i}: min-subtraction changed the offset"));
        }
        let mx = fractional_refine(&grid.mirrored_x());
        let my = fractional_refine(&grid.mirrored_y());
        let tr = fractional_refine(&grid.transposed());
        if (mx.qx, mx.qy) != (-base.qx, base.qy)
            || (my.qx, my.qy) != (base.qx, -base.qy)
            || (tr.qx, tr.qy) != (base.qy, base.qx)
        {
            return Err(format!("grid {i}: symmetry violated"));
        }
    }
    Ok(format!(
        "{grids} grids, shift/scale/mirror/transpose all hold"
    ))
}

fn satd_properties(residuals: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x3);
    for i in 0..residuals {
        let r: Residual4x4 = std::array::from_fn(|_| rng.random_range(-255..=255));
        let coeffs = hadamard4x4(&r);
        let lhs: i64 = coeffs.iter().map(|&c| c as i64 * c as i64).sum();
        let rhs: i64 = r.iter().map(|&v| v as i64 * v as i64).sum();
        if lhs != 16 * rhs {
            return Err(format!("residual {i}: Parseval {lhs} != 16*{rhs}"));
        }
        let neg: Residual4x4 = std::array::from_fn(|j| -r[j]);
        if satd4x4(&r) != satd4x4(&neg) {
            return Err(format!("residual {i}: sign symmetry broken"));
        }
    }
    // 8x8 = sum of 4x4 quadrants, checked on a few hundred block pairs.
    for i in 0..200 {
        let a = Plane::from_fn(8, 8, |_, _| rng.random());
        let b = Plane::from_fn(8, 8, |_, _| rng.random());
        let mut quadrants = 0u64;
        for qy in 0..2 {
            for qx in 0..2 {
                let mut r = [0i32; 16];
                for y in 0..4 {
                    for x in 0..4 {
                        r[y * 4 + x] = a.sample(qx * 4 + x, qy * 4 + y) as i32
                            - b.sample(qx * 4 + x, qy * 4 + y) as i32;
                    }
                }
                quadrants += satd4x4(&r);
            }
        }
        let direct = satd8x8(&a.view(0, 0, 8, 8).unwrap(), &b.view(0, 0, 8, 8).unwrap());
        if direct != quadrants {
            return Err(format!("block pair {i}: satd8x8 {direct} != quadrant sum"));
        }
    }
    Ok(format!("{residuals} residuals, Parseval and symmetry hold"))
}

fn rate_table(_: usize, _: u64) -> Outcome {
    for v in -32767..=32767i32 {
        let m = if v <= 0 {
            (-2 * v) as u32
        } else {
            (2 * v - 1) as u32
        };
        let mut bits = 0u32;
        let mut k = m + 1;
        while k > 0 {
            bits += 1;
            k >>= 1;
        }
        let table = 2 * bits - 1;
        let closed = mvd_bits(MotionVector::new(v, 0)) - 1;
        if closed != table {
            return Err(format!("component {v}: {closed} != table {table}"));
        }
    }
    Ok("closed-form rate == explicit table for all 16-bit components".to_string())
}

fn schedule_cycles(_: usize, _: u64) -> Outcome {
    let full = cu_size_set(SizeMode::Full);
    for n in 1..=full.len() {
        let sizes = &full[..n];
        let closed = cycle_count(sizes);
        let simulated = simulate_ctu_cycles(sizes);
        if closed != simulated {
            return Err(format!(
                "{n} sizes: closed form {closed} != sim {simulated}"
            ));
        }
    }
    if cycle_count(&full) != 26628 || cycle_count(&cu_size_set(SizeMode::Quadtree)) != 10244 {
        return Err("cycle anchors moved".to_string());
    }
    Ok("pipeline simulation == closed form for 1..=13 sizes".to_string())
}

fn zscan_cmvp(_: usize, _: u64) -> Outcome {
    for y in 0..16usize {
        for x in 0..16usize {
            if x > 0 && zscan_index(x - 1, y) >= zscan_index(x, y) {
                return Err(format!("left precedence broken at ({x},{y})"));
            }
            if y > 0 && zscan_index(x, y - 1) >= zscan_index(x, y) {
                return Err(format!("above precedence broken at ({x},{y})"));
            }
        }
    }
    // Replay the full-order pass: every CMVP read of an in-grid neighbor
    // must land on a slot an earlier 8x8 task has written.
    let sizes = cu_size_set(SizeMode::Full);
    let mut written = [[false; 16]; 16];
    let mut tasks_seen = 0usize;
    for task in task_order(&sizes) {
        tasks_seen += 1;
        let size = sizes[task.size_index];
        let (wb, hb) = (size.w / 8, size.h / 8);
        if task.is_last_block {
            let gx = (task.pos.0 / wb) * wb;
            let gy = (task.pos.1 / hb) * hb;
            if gx > 0 && !written[gy][gx - 1] {
                return Err(format!("unwritten left neighbor at ({gx},{gy})"));
            }
            if gy > 0 && !written[gy - 1][gx] {
                return Err(format!("unwritten above neighbor at ({gx},{gy})"));
            }
            if size.w == 8 && size.h == 8 {
                written[task.pos.1][task.pos.0] = true;
            }
        }
    }
    if tasks_seen != 256 * sizes.len() {
        return Err(format!(
            "expected {} tasks, saw {tasks_seen}",
            256 * sizes.len()
        ));
    }
    Ok("z-scan precedence and CMVP write-before-read hold".to_string())
}

type Suite = fn(usize, u64) -> Outcome;

/// Runs every suite, prints one line each, returns the failure count.
pub fn run_all(grids: usize, residuals: usize, seed: u64) -> usize {
    let suites: [(&str, Suite, usize); 7] = [
        ("surface-fit-oracle", surface_fit_oracle, grids),
        ("surface-refine-oracle", surface_refine_oracle, grids),
        ("surface-invariance", surface_invariance, grids),
        ("satd-properties", satd_properties, residuals),
        ("rate-table", rate_table, 0),
        ("schedule-cycles", schedule_cycles, 0),
        ("zscan-cmvp", zscan_cmvp, 0),
    ];
    let mut failures = 0;
    for (name, run, n) in suites {
        match run(n, seed) {
            Ok(detail) => println!("selftest {name}: ok ({detail})"),
            Err(why) => {
                println!("selftest {name}: FAILED ({why})");
                failures += 1;
            }
        }
    }
    failures
}
