use netmimo::channel::{drop_users, realize_channel, SystemConfig};
use netmimo::codebook::{aggregate_codeword, build_percell_codebooks, chordal_distance, Codebook, CodebookKind};
use netmimo::feedback::{
    build_subcodebooks, normalize_and_decompose, reconstruct, search_exhaustive, search_isa, ProductObjective,
};
use netmimo::numerics::{haar_orthonormal, RngStream};
use proptest::prelude::*;

fn books(cells: usize, bits: u32, rng: &mut RngStream) -> Vec<Codebook> {
    (0..cells)
        .map(|_| Codebook::random(CodebookKind::PerCell, 4, 2, bits, rng))
        .collect()
}

/// Exhaustive enumeration measuring every aggregate with the chordal distance.
fn brute_force(v: &netmimo::numerics::ComplexMatrix, cbs: &[Codebook]) -> (Vec<usize>, f64) {
    let sizes: Vec<usize> = cbs.iter().map(|c| c.len()).collect();
    let mut tuple = vec![0; cbs.len()];
    let mut best = (tuple.clone(), f64::INFINITY);
    loop {
        let parts: Vec<_> = tuple.iter().zip(cbs).map(|(&j, c)| c.get(j).unwrap()).collect();
        let d = chordal_distance(&aggregate_codeword(&parts).unwrap(), v).unwrap().powi(2);
        if d < best.1 - 1e-12 {
            best = (tuple.clone(), d);
        }
        let mut n = cbs.len();
        loop {
            if n == 0 {
                return best;
            }
            n -= 1;
            tuple[n] += 1;
            if tuple[n] < sizes[n] {
                break;
            }
            tuple[n] = 0;
        }
    }
}

#[test]
fn isa_distortion_shrinks_toward_exhaustive_as_radius_grows() {
    let cfg = SystemConfig::new(4, 3, 2, 1).with_bits_per_cell(4);
    let radii = [0.6, 0.9, 1.2, 2f64.sqrt()];
    let mut mean = [0.0; 4];
    let mut exhaustive = 0.0;
    for i in 0..200 {
        let mut rng = RngStream::new(51, 0, i);
        let cbs = build_percell_codebooks(&cfg, &mut rng);
        let pos = drop_users(&cfg, &mut rng).unwrap();
        let real = realize_channel(&cfg, &pos, &mut rng).unwrap();
        let norm = normalize_and_decompose(&real.users[0], 0, 4).unwrap();
        exhaustive += search_exhaustive(&norm.v_w, &cbs).unwrap().distortion;
        for (k, &d) in radii.iter().enumerate() {
            mean[k] += search_isa(&norm.v_w, &norm.centroids, &cbs, &[d; 3]).unwrap().distortion;
        }
    }
    assert!(mean.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{mean:?}");
    assert!((mean[3] - exhaustive).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exhaustive_matches_brute_force(seed in any::<u64>(), cells in 1usize..4, bits in 1u32..4) {
        let mut rng = RngStream::new(seed, 0, 0);
        let cbs = books(cells, bits, &mut rng);
        let v = haar_orthonormal(4 * cells, 2, &mut rng);
        let report = search_exhaustive(&v, &cbs).unwrap();
        let (tuple, d) = brute_force(&v, &cbs);
        prop_assert!((report.distortion - d).abs() < 1e-9);
        prop_assert!(same_objective(&v, &cbs, &report.indices, &tuple));
        prop_assert_eq!(report.searched_count, 1u64 << (bits as usize * cells));
    }

    #[test]
    fn isa_never_beats_exhaustive(seed in any::<u64>(), delta in 0.1f64..1.5) {
        let cfg = SystemConfig::new(4, 3, 2, 1).with_bits_per_cell(3);
        let mut rng = RngStream::new(seed, 1, 0);
        let cbs = build_percell_codebooks(&cfg, &mut rng);
        let pos = drop_users(&cfg, &mut rng).unwrap();
        let real = realize_channel(&cfg, &pos, &mut rng).unwrap();
        let norm = normalize_and_decompose(&real.users[0], 0, 4).unwrap();
        let ex = search_exhaustive(&norm.v_w, &cbs).unwrap();
        let isa = search_isa(&norm.v_w, &norm.centroids, &cbs, &[delta; 3]).unwrap();
        prop_assert!(isa.distortion >= ex.distortion - 1e-12);
        let subs = build_subcodebooks(&norm.centroids, &cbs, &[delta; 3]).unwrap();
        let product: u64 = subs.iter().map(|s| s.len() as u64).product();
        prop_assert_eq!(isa.searched_count, product);
        prop_assert!(isa.indices.iter().zip(&subs).all(|(j, s)| s.contains(j)));
    }

    #[test]
    fn reconstruction_spans_the_selected_aggregate(seed in any::<u64>()) {
        let cfg = SystemConfig::new(4, 3, 2, 2).with_bits_per_cell(2);
        let mut rng = RngStream::new(seed, 2, 0);
        let cbs = build_percell_codebooks(&cfg, &mut rng);
        let pos = drop_users(&cfg, &mut rng).unwrap();
        let real = realize_channel(&cfg, &pos, &mut rng).unwrap();
        for (k, u) in real.users.iter().enumerate() {
            let norm = normalize_and_decompose(u, k, 4).unwrap();
            let report = search_exhaustive(&norm.v_w, &cbs).unwrap();
            let q = reconstruct(&report, &cbs, u).unwrap();
            prop_assert!(q.v_hat_w.orthonormality_residual() < 1e-10);
            let d = chordal_distance(&q.v_hat_w, &norm.v_w).unwrap().powi(2);
            prop_assert!((d - report.distortion).abs() < 1e-9);
            prop_assert_eq!(q.h_hat.shape(), (2, 12));
        }
    }
}

/// Ties aside, the two searches must agree on the optimum's objective.
fn same_objective(v: &netmimo::numerics::ComplexMatrix, cbs: &[Codebook], a: &[usize], b: &[usize]) -> bool {
    let obj = ProductObjective::new(v, cbs).unwrap();
    (obj.distortion(a) - obj.distortion(b)).abs() < 1e-9
}
