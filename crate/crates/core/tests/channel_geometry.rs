use netmimo::channel::{bs_sites, drop_users, in_hexagon, path_loss_db, realize_channel, split_bits, Position, SystemConfig};
use netmimo::numerics::RngStream;
use proptest::prelude::*;

/// Midpoint-rule moments of the distance to the centre over a hexagon of
/// circumradius `r`, excluding a disk of radius `r_min`.
fn hexagon_distance_moments(r: f64, r_min: f64) -> (f64, f64) {
    let steps = 1200;
    let centre = Position { x: 0.0, y: 0.0 };
    let (w, h) = (3f64.sqrt() / 2.0 * r, r);
    let (dx, dy) = (2.0 * w / steps as f64, 2.0 * h / steps as f64);
    let (mut area, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for i in 0..steps {
        for j in 0..steps {
            let p = Position {
                x: -w + (i as f64 + 0.5) * dx,
                y: -h + (j as f64 + 0.5) * dy,
            };
            let d = p.distance(&centre);
            if in_hexagon(&p, &centre, r) && d >= r_min {
                area += 1.0;
                m1 += d;
                m2 += d * d;
            }
        }
    }
    let mean = m1 / area;
    (mean, m2 / area - mean * mean)
}

#[test]
fn user_distance_matches_hexagon_quadrature() {
    let mut cfg = SystemConfig::new(4, 3, 2, 20);
    cfg.min_bs_distance_m = 35.0;
    let sites = bs_sites(3, cfg.cell_radius_m);
    let mut rng = RngStream::new(31, 0, 0);
    let mut d = Vec::new();
    for _ in 0..1000 {
        for p in drop_users(&cfg, &mut rng).unwrap() {
            d.push(sites.iter().map(|s| s.distance(&p)).fold(f64::INFINITY, f64::min));
        }
    }
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let (m, v) = hexagon_distance_moments(cfg.cell_radius_m, cfg.min_bs_distance_m);
    assert!((mean / m - 1.0).abs() < 0.02, "mean {mean} vs {m}");
    assert!((var / v - 1.0).abs() < 0.05, "variance {var} vs {v}");
}

#[test]
fn users_are_spread_evenly_over_cells() {
    let cfg = SystemConfig::new(4, 3, 2, 30);
    let sites = bs_sites(3, cfg.cell_radius_m);
    let mut rng = RngStream::new(32, 0, 0);
    let mut counts = [0usize; 3];
    for _ in 0..1000 {
        for p in drop_users(&cfg, &mut rng).unwrap() {
            let own = sites.iter().position(|s| in_hexagon(&p, s, cfg.cell_radius_m)).unwrap();
            counts[own] += 1;
        }
    }
    let expected = 10_000.0;
    for c in counts {
        assert!((c as f64 - expected).abs() < 4.0 * (expected * 2.0 / 3.0).sqrt(), "{counts:?}");
    }
}

#[test]
fn sites_are_mutually_adjacent() {
    let r = 300.0;
    let s = bs_sites(3, r);
    for i in 0..3 {
        for j in i + 1..3 {
            assert!((s[i].distance(&s[j]) - 3f64.sqrt() * r).abs() < 1e-9);
        }
    }
}

#[test]
fn shadowing_has_configured_spread() {
    let cfg = SystemConfig::new(4, 3, 2, 10);
    let mut rng = RngStream::new(33, 0, 0);
    let mut db = Vec::new();
    for _ in 0..500 {
        let pos = drop_users(&cfg, &mut rng).unwrap();
        for u in realize_channel(&cfg, &pos, &mut rng).unwrap().users {
            db.extend(u.shadow_lin.iter().map(|s| 10.0 * s.log10()));
        }
    }
    let n = db.len() as f64;
    let mean = db.iter().sum::<f64>() / n;
    let sd = (db.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(mean.abs() < 0.3, "mean {mean}");
    assert!((sd - 8.0).abs() < 0.3, "sd {sd}");
}

#[test]
fn path_loss_reference_points() {
    let cfg = SystemConfig::new(4, 3, 2, 1);
    assert!((path_loss_db(1.0, &cfg).unwrap() - 130.19).abs() < 1e-12);
    assert!((path_loss_db(0.1, &cfg).unwrap() - 92.59).abs() < 1e-9);
    assert!(path_loss_db(0.0, &cfg).is_err());
}

proptest! {
    #[test]
    fn split_bits_sums_and_balances(total in 0u32..73, cells in 1usize..6) {
        let b = split_bits(total, cells);
        prop_assert_eq!(b.len(), cells);
        prop_assert_eq!(b.iter().sum::<u32>(), total);
        prop_assert!(b.iter().max().unwrap() - b.iter().min().unwrap() <= 1);
        prop_assert!(b.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn channel_shapes_and_gains(seed in any::<u64>()) {
        let cfg = SystemConfig::new(4, 3, 2, 6);
        let mut rng = RngStream::new(seed, 0, 0);
        let pos = drop_users(&cfg, &mut rng).unwrap();
        let real = realize_channel(&cfg, &pos, &mut rng).unwrap();
        prop_assert_eq!(real.users.len(), 6);
        for u in &real.users {
            prop_assert_eq!(u.h.shape(), (2, 12));
            prop_assert!(u.g_diag.iter().all(|g| *g > 0.0 && g.is_finite()));
            for n in 0..3 {
                let block = &u.g_diag[n * 4..(n + 1) * 4];
                prop_assert!(block.iter().all(|g| *g == block[0]));
            }
        }
    }
}
