use num_rational::BigRational;
use pep_cli::format::{write_problem, ComponentJson, ElemJson, FieldJson, ProblemJson, Rat, TermJson};
use pep_cli::CliError;
use proptest::prelude::*;

fn rat() -> impl Strategy<Value = Rat> {
    (-50i64..=50, 1i64..=12).prop_map(|(n, d)| Rat(BigRational::new(n.into(), d.into())))
}

fn nonzero_rat() -> impl Strategy<Value = Rat> {
    (prop_oneof![-50i64..=-1, 1i64..=50], 1i64..=12).prop_map(|(n, d)| Rat(BigRational::new(n.into(), d.into())))
}

fn field() -> impl Strategy<Value = FieldJson> {
    prop_oneof![Just(FieldJson::Rational), prop::sample::select(vec![-3i64, -1, 2, 5]).prop_map(|d| FieldJson::Quadratic { d })]
}

fn problem() -> impl Strategy<Value = ProblemJson> {
    (field(), 1usize..4, 1usize..3, 1usize..3).prop_flat_map(|(field, k, r, comps)| {
        let quadratic = field != FieldJson::Rational;
        let elem = move |nonzero: bool| {
            let a = if nonzero { nonzero_rat().boxed() } else { rat().boxed() };
            let b = if quadratic { rat().boxed() } else { Just(Rat(BigRational::from_integer(0.into()))).boxed() };
            (a, b).prop_map(|(a, b)| ElemJson { a, b })
        };
        let term = (elem(false), prop::collection::vec(prop::collection::vec(-3i64..=3, r), k)).prop_map(|(coeff, exponents)| TermJson { coeff, exponents });
        let comp = prop::collection::vec(term, 0..3).prop_map(|terms| ComponentJson { terms });
        (Just(field), prop::collection::vec(elem(true), k), Just(r), prop::collection::vec(comp, comps))
            .prop_map(|(field, bases, variables, components)| ProblemJson { field, bases, variables, components })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_files_are_byte_stable(p in problem()) {
        let f = p.to_pep().unwrap();
        let once = write_problem(&ProblemJson::from_pep(&f).unwrap());
        let reread: ProblemJson = serde_json::from_str(&once).unwrap();
        let g = reread.to_pep().unwrap();
        prop_assert_eq!(&g, &f);
        prop_assert_eq!(write_problem(&ProblemJson::from_pep(&g).unwrap()), once);
    }

    #[test]
    fn written_problems_evaluate_like_the_original(p in problem(), n in prop::collection::vec(-4i64..=4, 2)) {
        let f = p.to_pep().unwrap();
        let text = write_problem(&p);
        let g = serde_json::from_str::<ProblemJson>(&text).unwrap().to_pep().unwrap();
        let n = &n[..f.variables()];
        prop_assert_eq!(f.evaluate(n).unwrap(), g.evaluate(n).unwrap());
    }
}

#[test]
fn rationals_must_be_exact_fractions() {
    for bad in ["\"0.5\"", "\"1/0\"", "\"x\"", "\"\""] {
        let text = format!(r#"{{"field":{{"kind":"rational"}},"bases":[{{"a":{bad}}}],"variables":1,"components":[]}}"#);
        let err = pep_cli::format::parse_json::<ProblemJson>("p.json", &text).unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 1, .. }), "{bad}: {err}");
        assert_eq!(err.exit_code(), pep_cli::exit::PARSE);
    }
}

#[test]
fn exponent_shape_is_checked() {
    let text = r#"{"field":{"kind":"rational"},"bases":[{"a":"2"}],"variables":2,
        "components":[{"terms":[{"coeff":{"a":"1"},"exponents":[[1]]}]}]}"#;
    let p: ProblemJson = serde_json::from_str(text).unwrap();
    assert!(matches!(p.to_pep(), Err(CliError::Schema(_))));
}

#[test]
fn diagnostic_and_cap_errors_have_their_own_codes() {
    let diag = CliError::Core(pep_core::Error::Diagnostic("x".into()));
    assert_eq!(diag.exit_code(), pep_cli::exit::DIAGNOSTIC);
    let cap = CliError::Core(pep_core::Error::Cap { what: "box points", limit: 1, requested: 2 });
    assert_eq!(cap.exit_code(), pep_cli::exit::CAP);
    let field = CliError::Core(pep_core::Error::UnsupportedField("d = 4".into()));
    assert_eq!(field.exit_code(), pep_cli::exit::UNSUPPORTED_FIELD);
}
