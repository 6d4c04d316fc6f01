use proptest::prelude::*;
use raodp::accountant::{
    compose, convert, load_ledger, Budget, BudgetKind, ConversionTarget, Ledger, LedgerEntry,
    LedgerStore,
};
use raodp::MechanismKind;

fn budget_of(kind: BudgetKind) -> impl Strategy<Value = Budget> {
    (0.001f64..5.0, 1e-9f64..1e-3).prop_map(move |(a, b)| {
        let params = match kind {
            BudgetKind::Approx => vec![a, b],
            BudgetKind::Mcdp => vec![a, a * 0.5 + b],
            // every Rényi entry in a list shares the order
            BudgetKind::Renyi => vec![2.0, a],
            _ => vec![a],
        };
        Budget::from_params(kind, &params).unwrap()
    })
}

fn homogeneous_list() -> impl Strategy<Value = Vec<Budget>> {
    prop::sample::select(BudgetKind::ALL.to_vec())
        .prop_flat_map(|k| prop::collection::vec(budget_of(k), 1..12))
}

fn close(a: &Budget, b: &Budget, tol: f64) -> bool {
    a.kind() == b.kind()
        && a.params()
            .iter()
            .zip(b.params())
            .all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs()))
}

proptest! {
    #[test]
    fn composition_is_permutation_invariant(list in homogeneous_list(), rot in 0usize..12) {
        let mut other = list.clone();
        other.reverse();
        let r = rot % other.len();
        other.rotate_left(r);
        prop_assert!(close(&compose(&list).unwrap(), &compose(&other).unwrap(), 1e-13));
    }

    #[test]
    fn composition_is_associative(list in homogeneous_list(), cut in 0usize..12) {
        let cut = 1 + cut % list.len();
        if cut < list.len() {
            let left = compose(&list[..cut]).unwrap();
            let right = compose(&list[cut..]).unwrap();
            prop_assert!(close(&compose(&[left, right]).unwrap(), &compose(&list).unwrap(), 1e-13));
        }
    }

    #[test]
    fn rao_and_gdp_compose_identically(xs in prop::collection::vec(0.001f64..5.0, 1..10)) {
        let rao: Vec<Budget> = xs.iter().map(|&t| Budget::Rao { theta: t }).collect();
        let gdp: Vec<Budget> = xs.iter().map(|&m| Budget::Gdp { mu: m }).collect();
        prop_assert_eq!(compose(&rao).unwrap().params(), compose(&gdp).unwrap().params());
    }

    #[test]
    fn rao_composition_beats_linear(xs in prop::collection::vec(0.001f64..5.0, 2..10)) {
        let rao: Vec<Budget> = xs.iter().map(|&t| Budget::Rao { theta: t }).collect();
        let pure: Vec<Budget> = xs.iter().map(|&e| Budget::Pure { epsilon: e }).collect();
        prop_assert!(compose(&rao).unwrap().params()[0] < compose(&pure).unwrap().params()[0]);
    }

    #[test]
    fn conversions_invert(x in 1e-4f64..20.0, delta in 1e-12f64..0.5) {
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs();
        let lap = MechanismKind::Laplace;
        let gau = MechanismKind::Gaussian;

        let pure = Budget::Pure { epsilon: x };
        let back = convert(&convert(&pure, ConversionTarget::Rao, lap).unwrap(), ConversionTarget::Pure, lap).unwrap();
        prop_assert!(rel(x, back.params()[0]));

        let approx = Budget::Approx { epsilon: x, delta };
        let rao = convert(&approx, ConversionTarget::Rao, gau).unwrap();
        let back = convert(&rao, ConversionTarget::Approx { delta }, gau).unwrap();
        prop_assert!(rel(x, back.params()[0]));
        prop_assert_eq!(back.params()[1], delta);

        let gdp = Budget::Gdp { mu: x };
        let back = convert(&convert(&gdp, ConversionTarget::Rao, gau).unwrap(), ConversionTarget::Gdp, gau).unwrap();
        prop_assert!(rel(x, back.params()[0]));

        let theta = Budget::Rao { theta: x };
        let back = convert(&convert(&theta, ConversionTarget::Approx { delta }, gau).unwrap(), ConversionTarget::Rao, gau).unwrap();
        prop_assert!(rel(x, back.params()[0]));
    }

    #[test]
    fn ledger_round_trip_is_bit_exact(list in homogeneous_list()) {
        let total = compose(&list).unwrap();
        let mut ledger = Ledger::new(total).unwrap();
        for (i, b) in list.iter().enumerate() {
            ledger.record(LedgerEntry {
                release_id: format!("r{i}"),
                timestamp: "1970-01-01T00:00:00Z".into(),
                budget: *b,
                mechanism_summary: "m".into(),
                query_summary: "q".into(),
            }).unwrap();
        }
        let back = Ledger::from_json(&ledger.to_json()).unwrap();
        prop_assert_eq!(&back, &ledger);
        let bits = |b: Budget| b.params().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(back.spent().unwrap()), bits(ledger.spent().unwrap()));
        prop_assert_eq!(bits(back.remaining().budget), bits(ledger.remaining().budget));
    }
}

#[test]
fn table_rows() {
    let cases = [
        (
            vec![Budget::Pure { epsilon: 0.1 }, Budget::Pure { epsilon: 0.2 }],
            Budget::Pure { epsilon: 0.1 + 0.2 },
        ),
        (
            vec![
                Budget::Approx {
                    epsilon: 0.1,
                    delta: 1e-6,
                },
                Budget::Approx {
                    epsilon: 0.2,
                    delta: 1e-6,
                },
            ],
            Budget::Approx {
                epsilon: 0.1 + 0.2,
                delta: 2e-6,
            },
        ),
        (
            vec![Budget::Kl { alpha: 0.5 }, Budget::Kl { alpha: 0.25 }],
            Budget::Kl { alpha: 0.75 },
        ),
        (
            vec![
                Budget::Mcdp { mu: 0.1, tau: 0.3 },
                Budget::Mcdp { mu: 0.1, tau: 0.4 },
            ],
            Budget::Mcdp { mu: 0.2, tau: 0.5 },
        ),
        (
            vec![Budget::Zcdp { rho: 0.5 }, Budget::Zcdp { rho: 0.125 }],
            Budget::Zcdp { rho: 0.625 },
        ),
        (
            vec![
                Budget::Renyi {
                    alpha: 4.0,
                    epsilon: 0.5,
                },
                Budget::Renyi {
                    alpha: 4.0,
                    epsilon: 0.25,
                },
            ],
            Budget::Renyi {
                alpha: 4.0,
                epsilon: 0.75,
            },
        ),
        (
            vec![Budget::Gdp { mu: 3.0 }, Budget::Gdp { mu: 4.0 }],
            Budget::Gdp { mu: 5.0 },
        ),
        (
            vec![Budget::Rao { theta: 0.3 }, Budget::Rao { theta: 0.4 }],
            Budget::Rao { theta: 0.5 },
        ),
    ];
    for (list, expected) in cases {
        assert_eq!(compose(&list).unwrap(), expected, "{list:?}");
    }
}

#[test]
fn approx_to_rao_example() {
    let rao = convert(
        &Budget::Approx {
            epsilon: 1.0,
            delta: 1e-5,
        },
        ConversionTarget::Rao,
        MechanismKind::Gaussian,
    )
    .unwrap();
    let theta = rao.params()[0];
    assert!((theta - 1.0 / (2.0 * 1.25e5f64.ln()).sqrt()).abs() < 1e-15);
    assert!((theta - 0.206409).abs() < 5e-6);
}

#[test]
fn store_persists_every_record() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("l.json");
    let mut store = LedgerStore::create(&path, Budget::Rao { theta: 1.0 }).unwrap();
    for (i, t) in [0.3, 0.4].into_iter().enumerate() {
        store
            .record(LedgerEntry {
                release_id: format!("r{i}"),
                timestamp: "1970-01-01T00:00:00Z".into(),
                budget: Budget::Rao { theta: t },
                mechanism_summary: "laplace".into(),
                query_summary: "mean".into(),
            })
            .unwrap();
        assert_eq!(&load_ledger(&path).unwrap(), store.ledger());
    }
    assert_eq!(store.ledger().spent(), Some(Budget::Rao { theta: 0.5 }));
    let before = std::fs::read(&path).unwrap();
    assert!(store
        .record(LedgerEntry {
            release_id: "r0".into(),
            timestamp: "t".into(),
            budget: Budget::Rao { theta: 0.1 },
            mechanism_summary: String::new(),
            query_summary: String::new(),
        })
        .is_err());
    assert_eq!(std::fs::read(&path).unwrap(), before);
}
