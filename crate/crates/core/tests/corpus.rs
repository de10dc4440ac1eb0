//! Every file under `examples/systems` loads (or is rejected) as expected.

use std::path::PathBuf;

use hscale::cli::validation_report;
use hscale::format::load_system;
use hscale::Error;

#[derive(Debug, PartialEq)]
enum Expect {
    Valid,
    Invalid,
    Schema,
}

const CORPUS: [(&str, Expect); 9] = [
    ("e1.json", Expect::Valid),
    ("e1_operators.json", Expect::Valid),
    ("diamond.json", Expect::Valid),
    ("shift_chain.json", Expect::Valid),
    ("weighted_grid.json", Expect::Valid),
    ("weighted_grid_additive.json", Expect::Invalid),
    ("scaled_link.json", Expect::Invalid),
    ("malformed.json", Expect::Schema),
    ("ragged_matrix.json", Expect::Schema),
];

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/systems")
}

#[test]
fn corpus_outcomes() {
    for (name, expect) in CORPUS {
        let text = std::fs::read_to_string(dir().join(name)).unwrap();
        let got = match load_system(&text, None) {
            Err(Error::Schema { .. }) => Expect::Schema,
            Err(e) => panic!("{name}: {e}"),
            Ok(l) if validation_report(&l).passed() => Expect::Valid,
            Ok(_) => Expect::Invalid,
        };
        assert_eq!(got, expect, "{name}");
    }
}

#[test]
fn corpus_is_complete() {
    let mut on_disk: Vec<String> = std::fs::read_dir(dir())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".json"))
        .collect();
    on_disk.sort();
    let mut listed: Vec<String> = CORPUS.iter().map(|(n, _)| n.to_string()).collect();
    listed.sort();
    assert_eq!(on_disk, listed);
}

#[test]
fn generated_samples_are_current() {
    use hscale::cli::generated_file;
    use hscale::generators::{GeneratorSpec, WeightForm};
    let cases = [
        ("e1.json", GeneratorSpec::E1),
        ("diamond.json", GeneratorSpec::Diamond),
        ("shift_chain.json", GeneratorSpec::ShiftChain { dim: 3, levels: 4 }),
        (
            "weighted_grid_additive.json",
            GeneratorSpec::WeightedGrid {
                xmin: -0.5,
                xmax: 0.5,
                points: 3,
                alphas: vec![0.0, 2.0],
                weight: WeightForm::OnePlusPow,
            },
        ),
    ];
    for (name, spec) in cases {
        let on_disk = std::fs::read_to_string(dir().join(name)).unwrap();
        assert_eq!(on_disk.trim_end(), generated_file(&spec, false).unwrap().to_json(), "{name}");
    }
}
