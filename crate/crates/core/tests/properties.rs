use proptest::collection::vec;
use proptest::prelude::*;

use qps3vm::dataio::{make_split, parse_libsvm_str, write_libsvm};
use qps3vm::harness::fixtures::{random_fixture, FixtureKernel, FixtureShape};
use qps3vm::kernels::{build_blocks_with_mode, GramMode};
use qps3vm::qp::{decompose, project_capped_simplex, qp_constant, qp_objective, qp_objective_standard};
use qps3vm::submodular::{greedy_maximize, lazy_greedy_maximize};
use qps3vm::{Dataset, KernelBlocks, Label, SoftLabels, SparseVector, SplitSpec, SubmodularObjective};

fn sparse_row(n_features: u32) -> impl Strategy<Value = SparseVector> {
    vec((1..=n_features, -1e3f64..1e3), 0..n_features as usize).prop_map(|mut entries| {
        entries.sort_by_key(|e| e.0);
        entries.dedup_by_key(|e| e.0);
        SparseVector::new(entries).expect("strictly increasing indices")
    })
}

fn dataset() -> impl Strategy<Value = Dataset> {
    (1u32..8).prop_flat_map(|nf| {
        vec((sparse_row(nf), any::<bool>()), 1..30).prop_map(|rows| {
            let (samples, labels): (Vec<_>, Vec<_>) = rows
                .into_iter()
                .map(|(s, pos)| (s, if pos { Label::Positive } else { Label::Negative }))
                .unzip();
            Dataset::new(samples, labels).expect("non-empty")
        })
    })
}

fn fixture_shape() -> impl Strategy<Value = (u64, FixtureShape)> {
    (any::<u64>(), 2usize..6, 3usize..14, 1usize..5, any::<bool>()).prop_map(|(seed, nl, nu, nf, rbf)| {
        (
            seed,
            FixtureShape {
                n_labeled: nl,
                n_unlabeled: nu,
                n_features: nf,
                kernel: if rbf { FixtureKernel::Rbf } else { FixtureKernel::Linear },
            },
        )
    })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn libsvm_text_round_trips(d in dataset()) {
        let mut text = Vec::new();
        write_libsvm(&d, &mut text).unwrap();
        let back = parse_libsvm_str(std::str::from_utf8(&text).unwrap()).unwrap();
        prop_assert_eq!(back.samples(), d.samples());
        prop_assert_eq!(back.labeled_labels(), d.labeled_labels());
    }

    #[test]
    fn normalization_is_idempotent_and_bounded(d in dataset()) {
        let once = d.normalize_features();
        prop_assert!(once.samples().iter().all(|s| s.values().iter().all(|v| (0.0..=1.0).contains(v))));
        prop_assert_eq!(once.normalize_features(), once);
    }

    #[test]
    fn splits_are_deterministic_partitions(d in dataset(), n_labeled in 2usize..6, seed in any::<u64>()) {
        let spec = SplitSpec::new(n_labeled, seed);
        match make_split(&d, &spec) {
            Ok(s) => {
                prop_assert_eq!(&make_split(&d, &spec).unwrap(), &s);
                prop_assert_eq!(s.n_labeled(), n_labeled);
                prop_assert_eq!(s.n_labeled() + s.n_unlabeled(), d.len());
                let mut all: Vec<usize> = s.labeled_idx().iter().chain(s.unlabeled_idx()).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..d.len()).collect::<Vec<_>>());
                let labels = s.labeled_labels();
                prop_assert!(labels.contains(&Label::Positive) && labels.contains(&Label::Negative));
            }
            Err(_) => {
                let positives = (0..d.len()).filter(|&i| d.ground_truth(i) == Label::Positive).count();
                prop_assert!(n_labeled >= d.len() || positives == 0 || positives == d.len());
            }
        }
    }

    #[test]
    fn cached_sums_and_cache_file_agree_with_entries((seed, shape) in fixture_shape()) {
        let f = random_fixture(seed, shape).unwrap();
        let b = &f.blocks;
        let k = b.k_uu_dense().unwrap();
        for j in 0..b.n_unlabeled() {
            let direct: f64 = (0..b.n_unlabeled()).map(|j2| k[(j, j2)]).sum();
            prop_assert!(close(b.rowsum_uu()[j], direct, 1e-12));
            let ys: f64 = (0..b.n_labeled()).map(|i| b.y_labeled()[i] * b.k_lu()[(i, j)]).sum();
            prop_assert!(close(b.ylabelsum_lu()[j], ys, 1e-12));
        }
        let lazy = build_blocks_with_mode(&f.data, &f.kernel, GramMode::OnDemand).unwrap();
        for j in 0..b.n_unlabeled() {
            let row = lazy.uu_row(j);
            prop_assert_eq!(row.as_ref(), k.row(j));
        }
        let mut bytes = Vec::new();
        b.write_cache(&mut bytes).unwrap();
        let back = KernelBlocks::read_cache(bytes.as_slice(), &f.kernel).unwrap();
        prop_assert_eq!(back.k_uu_dense().unwrap(), k);
        prop_assert_eq!(back.k_lu(), b.k_lu());
        prop_assert_eq!(back.k_ll(), b.k_ll());
        prop_assert_eq!(back.d(), b.d());
    }

    #[test]
    fn objective_forms_agree((seed, shape) in fixture_shape(), raw in vec(0.0f64..1.0, 13)) {
        let f = random_fixture(seed, shape).unwrap();
        let n = f.blocks.n_unlabeled();
        let p = SoftLabels::new(raw[..n].to_vec()).unwrap();
        let full = qp_objective(&p, &f.blocks, &f.cfg).unwrap();
        let standard = qp_objective_standard(&p, &f.blocks, &f.cfg).unwrap();
        let zero = qp_objective(&SoftLabels::constant(n, 0.0), &f.blocks, &f.cfg).unwrap();
        prop_assert!(close(full - zero, standard, 1e-10));
        prop_assert!(close(zero, qp_constant(&f.blocks, &f.cfg), 1e-12));
        let parts = decompose(&p, &f.blocks, &f.cfg).unwrap();
        prop_assert!(close(parts.total(), full, 1e-10));
    }

    #[test]
    fn projection_is_feasible(v in vec(-5.0f64..5.0, 1..40), frac in 0.0f64..1.0) {
        let total = frac * v.len() as f64;
        let p = project_capped_simplex(&v, total);
        prop_assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
        prop_assert!((p.iter().sum::<f64>() - total).abs() <= 1e-9 * (1.0 + total));
        let again = project_capped_simplex(&p, total);
        for (a, b) in p.iter().zip(&again) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn incremental_state_tracks_direct_evaluation((seed, shape) in fixture_shape(), order in vec(any::<prop::sample::Index>(), 1..14)) {
        let f = random_fixture(seed, shape).unwrap();
        let obj = SubmodularObjective::new(&f.blocks, &f.cfg);
        let n = obj.n_unlabeled();
        let mut state = obj.state();
        for pick in order {
            let open: Vec<usize> = (0..n).filter(|m| !state.contains(*m)).collect();
            if open.is_empty() {
                break;
            }
            let m = open[pick.index(open.len())];
            let before = obj.s_value(state.selected()).unwrap();
            let gain = state.marginal_gain(m).unwrap();
            prop_assert!(gain >= -1e-9);
            state.insert(m).unwrap();
            let after = obj.s_value(state.selected()).unwrap();
            prop_assert!(close(after - before, gain, 1e-9));
            prop_assert!(close(state.value(), after, 1e-9));
            for q in 0..n {
                let direct: f64 = state.selected().iter().map(|&a| f.blocks.uu(q, a)).sum();
                prop_assert!(close(state.sum_a(q), direct, 1e-12));
            }
        }
    }

    #[test]
    fn lazy_and_plain_greedy_agree((seed, shape) in fixture_shape()) {
        let f = random_fixture(seed, shape).unwrap();
        let obj = SubmodularObjective::new(&f.blocks, &f.cfg);
        let k = f.cfg.cardinality(obj.n_unlabeled()).unwrap();
        let plain = greedy_maximize(&obj, k).unwrap();
        let lazy = lazy_greedy_maximize(&obj, k).unwrap();
        prop_assert_eq!(plain.selected.len(), k);
        prop_assert_eq!(&lazy.selected, &plain.selected);
        prop_assert!(lazy.evaluations <= plain.evaluations);
    }
}
