//! The builtin embedder against vectors from `scripts/embed_reference.py`.

use serde_json::Value;

use twosys_core::embedding::{cosine, embed_dim, fnv1a64};

fn golden() -> Value {
    serde_json::from_str(include_str!("../data/embed_golden.json")).unwrap()
}

#[test]
fn fnv_matches_reference() {
    for (s, h) in golden()["fnv1a64"].as_object().unwrap() {
        assert_eq!(fnv1a64(s.as_bytes()), h.as_u64().unwrap(), "{s:?}");
    }
}

#[test]
fn vectors_match_reference() {
    let g = golden();
    let dim = g["dimension"].as_u64().unwrap() as usize;
    for v in g["vectors"].as_array().unwrap() {
        let text = v["text"].as_str().unwrap();
        let mut want = vec![0.0; dim];
        for (i, x) in v["nonzero"].as_object().unwrap() {
            want[i.parse::<usize>().unwrap()] = x.as_f64().unwrap();
        }
        let got = embed_dim(text, dim).unwrap();
        for (i, (a, b)) in got.values().iter().zip(&want).enumerate() {
            assert!((a - b).abs() < 1e-12, "{text:?} [{i}]: {a} vs {b}");
        }
    }
}

#[test]
fn cosines_match_reference() {
    let g = golden();
    let dim = g["dimension"].as_u64().unwrap() as usize;
    let texts: Vec<&str> = g["vectors"].as_array().unwrap().iter().map(|v| v["text"].as_str().unwrap()).collect();
    for c in g["cosines"].as_array().unwrap() {
        let (i, j, want) = (c[0].as_u64().unwrap() as usize, c[1].as_u64().unwrap() as usize, c[2].as_f64().unwrap());
        let got = cosine(&embed_dim(texts[i], dim).unwrap(), &embed_dim(texts[j], dim).unwrap()).unwrap();
        assert!((got - want).abs() < 1e-9, "{:?} / {:?}: {got} vs {want}", texts[i], texts[j]);
    }
}
