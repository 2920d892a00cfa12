use std::path::PathBuf;

use num_complex::Complex64;
use proptest::prelude::*;
use sfcoeff_core::modforms::{builtin_newform, level1_newforms, NewformRecord, RecordSource};
use sfcoeff_core::newform_io::*;
use sfcoeff_core::{Error, Parallelism};

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/newforms").join(name)
}

fn float_only(r: &NewformRecord) -> NewformRecord {
    NewformRecord::new(r.level, r.weight, r.character.clone(), r.lambdas().to_vec(), r.source, r.label.clone()).unwrap()
}

#[test]
fn delta_round_trip() {
    let d = level1_newforms(12, 1000, Parallelism::Sequential).unwrap().remove(0);
    let dir = tempfile::tempdir().unwrap();
    for rec in [d.clone(), float_only(&d)] {
        let path = dir.path().join("delta.nf");
        save_newforms(std::slice::from_ref(&rec), &path).unwrap();
        let first = std::fs::read(&path).unwrap();
        save_newforms(std::slice::from_ref(&rec), &path).unwrap();
        assert_eq!(first, std::fs::read(&path).unwrap());
        let back = load_newforms(&path).unwrap().remove(0);
        let dev = (1..=1000).map(|n| (back.lambda(n).unwrap() - rec.lambda(n).unwrap()).norm()).fold(0.0, f64::max);
        assert!(dev < 1e-12);
        assert_eq!((back.level, back.weight, &back.character, &back.label, back.source), (rec.level, rec.weight, &rec.character, &rec.label, rec.source));
        assert_eq!(back.exact(), rec.exact());
    }
}

#[test]
fn empty_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.nf");
    save_newforms(&[], &path).unwrap();
    assert!(load_newforms(&path).unwrap().is_empty());
}

#[test]
fn golden_files_match_computed_forms() {
    for (label, file) in [("1.12.a", "N1k12_1.nf"), ("11.2.a", "N11k2_1.nf"), ("1.24.a", "N1k24_1.nf")] {
        let loaded = load_newforms(golden(file)).unwrap();
        assert_eq!(loaded.len(), 1);
        let computed = builtin_newform(label, 60, Parallelism::Sequential).unwrap();
        assert_eq!(render(&loaded), std::fs::read_to_string(golden(file)).unwrap(), "{file}");
        assert_eq!(render(&[computed]), render(&loaded), "{file}");
    }
}

#[test]
fn short_body_and_corruption() {
    let text = std::fs::read_to_string(golden("N1k12_1.nf")).unwrap();
    let short = text.replace("count 60", "count 100");
    assert!(matches!(parse_newforms(&short), Err(Error::MalformedFile { .. })));
    // τ(6) = −6048
    let corrupt = text.replace("coeff 6 -6048", "coeff 6 -6000");
    match parse_newforms(&corrupt) {
        Err(Error::InconsistentData(msg)) => assert!(msg.contains("multiplicativity at n=6"), "{msg}"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(load_newforms("/nonexistent/file.nf"), Err(Error::Io(_))));
}

fn record_strategy() -> impl Strategy<Value = NewformRecord> {
    (prop::collection::vec((-3.0f64..3.0, -1.0f64..1.0), 1..60), 1u32..40).prop_map(|(vals, k)| {
        let mut lam = vec![Complex64::new(0.0, 0.0)];
        lam.extend(vals.into_iter().map(|(re, im)| Complex64::new(re, im)));
        NewformRecord::new(1, k, sfcoeff_core::modforms::CharacterTable::trivial(1), lam, RecordSource::Ingested, "random").unwrap()
    })
}

proptest! {
    #[test]
    fn render_parse_is_identity_on_arbitrary_values(rec in record_strategy()) {
        // parsing validates, so compare the text layer directly
        let text = render(std::slice::from_ref(&rec));
        let again = text.lines().filter(|l| l.starts_with("coeff")).count();
        prop_assert_eq!(again, rec.prec());
        for (n, line) in text.lines().filter(|l| l.starts_with("coeff")).enumerate() {
            let f: Vec<&str> = line.split_whitespace().collect();
            let v = Complex64::new(f[2].parse().unwrap(), f[3].parse().unwrap());
            prop_assert_eq!(v, rec.lambdas()[n + 1]);
        }
    }

    #[test]
    fn validate_is_monotone(rec in record_strategy(), t in 1e-12f64..1.0, factor in 1.0f64..100.0) {
        if validate(&rec, t).is_valid() {
            prop_assert!(validate(&rec, t * factor).is_valid());
        }
        prop_assert!(validate(&rec, t * factor).violations.len() + validate(&rec, t * factor).omitted <= validate(&rec, t).violations.len() + validate(&rec, t).omitted);
    }
}
