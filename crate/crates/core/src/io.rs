//! JSON file formats for games, strategies, moment vectors and
//! certificates.
//!
//! Every format is a single JSON object with explicit counts, so files
//! are self-describing and validate on load. Complex numbers are
//! `[re, im]` pairs, matrices are row-major nested arrays, words use the
//! same syntax as the display form ("1", "A0 B1").

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::certificate::{Multiplier, SosCertificate};
use crate::error::{Error, Result};
use crate::game::{ClassicalStrategy, GameSpec};
use crate::moment::MomentVector;
use crate::strategy::FiniteStrategy;
use crate::word::{Alphabet, GroupWord};

#[derive(Serialize, Deserialize)]
struct GameFile {
    x_count: u32,
    y_count: u32,
    forbidden: Vec<[u32; 4]>,
}

#[derive(Serialize, Deserialize)]
struct StrategyFile {
    dim: usize,
    #[serde(rename = "E0")]
    e0: Vec<Vec<Vec<[f64; 2]>>>,
    #[serde(rename = "F0")]
    f0: Vec<Vec<Vec<[f64; 2]>>>,
    psi: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct ClassicalFile {
    u: Vec<u8>,
    v: Vec<u8>,
}

#[derive(Serialize, Deserialize)]
struct MomentFile {
    degree: usize,
    x_count: u32,
    y_count: u32,
    values: Vec<(String, f64)>,
}

#[derive(Serialize, Deserialize)]
struct CertificateFile {
    degree: usize,
    x_count: u32,
    y_count: u32,
    basis: Vec<String>,
    gram: Vec<f64>,
    multipliers: Vec<(String, usize, f64)>,
    forbidden: Vec<[u32; 4]>,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_word(s: &str, alphabet: Alphabet, path: &Path) -> Result<GroupWord> {
    GroupWord::parse(s, alphabet).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn forbidden_tuples(raw: &[[u32; 4]], path: &Path) -> Result<Vec<(u32, u32, u8, u8)>> {
    raw.iter()
        .map(|&[x, y, a, b]| {
            if a > 1 || b > 1 {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    message: format!("answers must be bits, found ({x}, {y}, {a}, {b})"),
                });
            }
            Ok((x, y, a as u8, b as u8))
        })
        .collect()
}

pub fn load_game(path: impl AsRef<Path>) -> Result<GameSpec> {
    let path = path.as_ref();
    let file: GameFile = read_json(path)?;
    let forbidden = forbidden_tuples(&file.forbidden, path)?;
    GameSpec::from_forbidden(file.x_count, file.y_count, &forbidden)
}

pub fn save_game(path: impl AsRef<Path>, game: &GameSpec) -> Result<()> {
    let file = GameFile {
        x_count: game.x_count(),
        y_count: game.y_count(),
        forbidden: game
            .forbidden()
            .into_iter()
            .map(|(x, y, a, b)| [x, y, a as u32, b as u32])
            .collect(),
    };
    write_json(path.as_ref(), &file)
}

fn matrix_to_rows(m: &DMatrix<Complex64>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn rows_to_matrix(rows: &[Vec<[f64; 2]>], dim: usize, what: &str) -> Result<DMatrix<Complex64>> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::ShapeMismatch(format!("{what} is not {dim}x{dim}")));
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

pub fn load_strategy(path: impl AsRef<Path>) -> Result<FiniteStrategy> {
    let path = path.as_ref();
    let file: StrategyFile = read_json(path)?;
    let dim = file.dim;
    let e0 = file
        .e0
        .iter()
        .map(|rows| rows_to_matrix(rows, dim, "an Alice projector"))
        .collect::<Result<Vec<_>>>()?;
    let f0 = file
        .f0
        .iter()
        .map(|rows| rows_to_matrix(rows, dim, "a Bob projector"))
        .collect::<Result<Vec<_>>>()?;
    if file.psi.len() != dim {
        return Err(Error::ShapeMismatch(format!(
            "state has {} entries, dimension is {dim}",
            file.psi.len()
        )));
    }
    let psi = DVector::from_iterator(dim, file.psi.iter().map(|&[re, im]| Complex64::new(re, im)));
    let alphabet = Alphabet::new(e0.len() as u32, f0.len() as u32);
    FiniteStrategy::new(alphabet, e0, f0, psi)
}

pub fn save_strategy(path: impl AsRef<Path>, strategy: &FiniteStrategy) -> Result<()> {
    let alphabet = strategy.alphabet();
    let file = StrategyFile {
        dim: strategy.dim(),
        e0: (0..alphabet.x_count)
            .map(|x| matrix_to_rows(strategy.e0(x)))
            .collect(),
        f0: (0..alphabet.y_count)
            .map(|y| matrix_to_rows(strategy.f0(y)))
            .collect(),
        psi: strategy.psi().iter().map(|c| [c.re, c.im]).collect(),
    };
    write_json(path.as_ref(), &file)
}

pub fn load_classical(path: impl AsRef<Path>) -> Result<ClassicalStrategy> {
    let path = path.as_ref();
    let file: ClassicalFile = read_json(path)?;
    if file.u.iter().chain(&file.v).any(|&bit| bit > 1) {
        return Err(Error::Parse {
            path: path.display().to_string(),
            message: "answers must be bits".into(),
        });
    }
    Ok(ClassicalStrategy::new(file.u, file.v))
}

pub fn save_classical(path: impl AsRef<Path>, strategy: &ClassicalStrategy) -> Result<()> {
    let file = ClassicalFile {
        u: strategy.u.clone(),
        v: strategy.v.clone(),
    };
    write_json(path.as_ref(), &file)
}

pub fn load_moments(path: impl AsRef<Path>) -> Result<MomentVector> {
    let path = path.as_ref();
    let file: MomentFile = read_json(path)?;
    let alphabet = Alphabet::new(file.x_count, file.y_count);
    let entries = file
        .values
        .iter()
        .map(|(w, v)| Ok((parse_word(w, alphabet, path)?, *v)))
        .collect::<Result<Vec<_>>>()?;
    for (w, _) in &entries {
        if w.len() > 2 * file.degree {
            return Err(Error::Parse {
                path: path.display().to_string(),
                message: format!("word {w} exceeds degree {}", file.degree),
            });
        }
    }
    Ok(MomentVector::from_values(alphabet, file.degree, entries))
}

pub fn save_moments(path: impl AsRef<Path>, moments: &MomentVector) -> Result<()> {
    let alphabet = moments.alphabet();
    let file = MomentFile {
        degree: moments.degree(),
        x_count: alphabet.x_count,
        y_count: alphabet.y_count,
        values: moments
            .iter()
            .map(|(w, v)| (w.to_string(), v))
            .collect(),
    };
    write_json(path.as_ref(), &file)
}

pub fn load_certificate(path: impl AsRef<Path>) -> Result<SosCertificate> {
    let path = path.as_ref();
    let file: CertificateFile = read_json(path)?;
    let alphabet = Alphabet::new(file.x_count, file.y_count);
    let side = file.basis.len();
    if file.gram.len() != side * side {
        return Err(Error::Parse {
            path: path.display().to_string(),
            message: format!(
                "gram has {} entries, basis of {side} words needs {}",
                file.gram.len(),
                side * side
            ),
        });
    }
    let gram = DMatrix::from_row_slice(side, side, &file.gram);
    let multipliers = file
        .multipliers
        .iter()
        .map(|(w, i, c)| {
            Ok(Multiplier {
                word: parse_word(w, alphabet, path)?,
                invalid_index: *i,
                coeff: *c,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let forbidden = forbidden_tuples(&file.forbidden, path)?;
    let cert =
        SosCertificate::from_parts(alphabet, file.degree, gram, multipliers, forbidden)?;
    for (stored, canonical) in file.basis.iter().zip(cert.basis()) {
        let parsed = parse_word(stored, alphabet, path)?;
        if parsed != *canonical {
            return Err(Error::Parse {
                path: path.display().to_string(),
                message: format!("basis word {stored} out of order, expected {canonical}"),
            });
        }
    }
    Ok(cert)
}

pub fn save_certificate(path: impl AsRef<Path>, cert: &SosCertificate) -> Result<()> {
    let alphabet = cert.alphabet();
    let file = CertificateFile {
        degree: cert.degree(),
        x_count: alphabet.x_count,
        y_count: alphabet.y_count,
        basis: cert.basis().iter().map(|w| w.to_string()).collect(),
        gram: cert.gram().row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect(),
        multipliers: cert
            .multipliers()
            .iter()
            .map(|m| (m.word.to_string(), m.invalid_index, m.coeff))
            .collect(),
        forbidden: cert
            .forbidden()
            .iter()
            .map(|&(x, y, a, b)| [x, y, a as u32, b as u32])
            .collect(),
    };
    write_json(path.as_ref(), &file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve, SolveOptions, SolveStatus};
    use crate::strategy::chsh_optimal;

    fn round_trip_bytes<T>(
        dir: &tempfile::TempDir,
        value: &T,
        save: impl Fn(&Path, &T) -> Result<()>,
        load: impl Fn(&Path) -> Result<T>,
    ) -> T {
        let first = dir.path().join("first.json");
        let second = dir.path().join("second.json");
        save(&first, value).unwrap();
        let loaded = load(&first).unwrap();
        save(&second, &loaded).unwrap();
        assert_eq!(
            std::fs::read(&first).unwrap(),
            std::fs::read(&second).unwrap(),
            "round trip must be byte-stable"
        );
        loaded
    }

    #[test]
    fn game_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let game = GameSpec::chsh();
        let loaded = round_trip_bytes(&dir, &game, |p, g| save_game(p, g), |p| load_game(p));
        assert_eq!(loaded, game);
    }

    #[test]
    fn strategy_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let strategy = chsh_optimal();
        let loaded = round_trip_bytes(
            &dir,
            &strategy,
            |p, s| save_strategy(p, s),
            |p| load_strategy(p),
        );
        assert_eq!(loaded.dim(), 4);
        let report = loaded.validate(&GameSpec::chsh()).unwrap();
        assert!(report.well_formed(1e-12), "{}", report.summary());
    }

    #[test]
    fn classical_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let strategy = ClassicalStrategy::new(vec![0, 1], vec![1, 0]);
        let loaded = round_trip_bytes(
            &dir,
            &strategy,
            |p, s| save_classical(p, s),
            |p| load_classical(p),
        );
        assert_eq!(loaded, strategy);
    }

    #[test]
    fn moments_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let strategy = ClassicalStrategy::new(vec![0, 1], vec![1, 0]);
        let moments = MomentVector::from_classical(&strategy, Alphabet::new(2, 2), 2);
        let loaded = round_trip_bytes(
            &dir,
            &moments,
            |p, m| save_moments(p, m),
            |p| load_moments(p),
        );
        assert_eq!(loaded.degree(), 2);
        for (w, v) in moments.iter() {
            assert_eq!(loaded.get(w), Some(v));
        }
    }

    #[test]
    fn certificate_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let game = GameSpec::chsh();
        let problem = crate::moment::MomentProblem::new(&game, 1).unwrap();
        let SolveStatus::Infeasible(ray) = solve(&problem, &SolveOptions::default()).status
        else {
            panic!("expected refutation");
        };
        let cert = crate::certificate::extract_certificate(&ray, &problem, 1e-6).unwrap();
        let loaded = round_trip_bytes(
            &dir,
            &cert,
            |p, c| save_certificate(p, c),
            |p| load_certificate(p),
        );
        assert_eq!(loaded, cert);
        assert!(loaded.verify_float(&game).unwrap().is_sound());
    }

    #[test]
    fn malformed_files_are_reported_with_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("broken.game");
        std::fs::write(&path, "{ not json").unwrap();
        match load_game(&path) {
            Err(Error::Parse { path: p, message }) => {
                assert!(p.ends_with("broken.game"));
                assert!(message.contains("line"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }

        let missing = dir.path().join("missing.game");
        assert!(matches!(load_game(&missing), Err(Error::Io { .. })));
    }

    #[test]
    fn invalid_contents_are_rejected() {
        let dir = tempfile::tempdir().unwrap();

        let path = dir.path().join("bad_bits.game");
        std::fs::write(
            &path,
            r#"{"x_count": 1, "y_count": 1, "forbidden": [[0, 0, 2, 0]]}"#,
        )
        .unwrap();
        assert!(matches!(load_game(&path), Err(Error::Parse { .. })));

        let path = dir.path().join("bad_range.game");
        std::fs::write(
            &path,
            r#"{"x_count": 1, "y_count": 1, "forbidden": [[3, 0, 0, 0]]}"#,
        )
        .unwrap();
        assert!(load_game(&path).is_err());

        let path = dir.path().join("bad_word.moments");
        std::fs::write(
            &path,
            r#"{"degree": 1, "x_count": 1, "y_count": 1, "values": [["B0 A0", 1.0]]}"#,
        )
        .unwrap();
        assert!(matches!(load_moments(&path), Err(Error::Parse { .. })));

        let path = dir.path().join("bad_gram.certificate");
        std::fs::write(
            &path,
            r#"{"degree": 1, "x_count": 1, "y_count": 1, "basis": ["1", "A0", "B0"],
                "gram": [1.0, 0.0], "multipliers": [], "forbidden": []}"#,
        )
        .unwrap();
        assert!(matches!(load_certificate(&path), Err(Error::Parse { .. })));

        let path = dir.path().join("bad_psi.strategy");
        std::fs::write(
            &path,
            r#"{"dim": 2, "E0": [[[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]],
                "F0": [[[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]],
                "psi": [[1.0, 0.0]]}"#,
        )
        .unwrap();
        assert!(matches!(
            load_strategy(&path),
            Err(Error::ShapeMismatch(_))
        ));
    }
}
