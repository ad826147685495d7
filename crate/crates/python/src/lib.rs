//! Python bindings: `import tileforge`.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use tileforge::abelian::GroupSpec;
use tileforge::analysis::{fit_board, scale_report, tetris, ScaleMode};
use tileforge::encode::{
    alignment_search, encode_boolean_pair, encode_linear, encode_periodicity, encode_shifted_mod,
    encoder_equivalence_check,
};
use tileforge::io;
use tileforge::padic::{self, Certificate as CoreCertificate, Classifier, PadicParams, Valuation};
use tileforge::render::{render_ascii, render_pgm, Shading};
use tileforge::sudoku::{self, VerifyMode};
use tileforge::tiling::{self, PartitionSearch};

create_exception!(tileforge, TileforgeError, PyValueError);

fn err(e: tileforge::Error) -> PyErr {
    TileforgeError::new_err(e.to_string())
}

/// A finitely generated abelian group `Z^r x Z/n1 x ... x Z/nk`.
#[pyclass(name = "Group", frozen)]
struct PyGroup(GroupSpec);

#[pymethods]
impl PyGroup {
    #[new]
    fn new(literal: &str) -> PyResult<Self> {
        literal.parse().map(PyGroup).map_err(err)
    }

    #[getter]
    fn rank(&self) -> usize {
        self.0.rank()
    }

    #[getter]
    fn moduli(&self) -> Vec<u64> {
        self.0.moduli().to_vec()
    }

    /// Order of a finite group; error for infinite groups.
    fn order(&self) -> PyResult<u64> {
        self.0.order().map_err(err)
    }

    /// Elements of a finite group, as serialized literals.
    fn elements(&self) -> PyResult<Vec<String>> {
        Ok(self.0.elements().map_err(err)?.iter().map(|e| e.to_string()).collect())
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Group('{}')", self.0)
    }
}

/// Membership certificate of a line function.
#[pyclass(name = "Certificate", frozen)]
struct PyCertificate(CoreCertificate);

#[pymethods]
impl PyCertificate {
    /// "constant" or "affine".
    #[getter]
    fn kind(&self) -> &'static str {
        match self.0 {
            CoreCertificate::Constant(_) => "constant",
            CoreCertificate::Affine { .. } => "affine",
        }
    }

    #[getter]
    fn c(&self) -> Option<u8> {
        match self.0 {
            CoreCertificate::Constant(c) => Some(c),
            CoreCertificate::Affine { .. } => None,
        }
    }

    #[getter]
    fn t(&self) -> Option<u64> {
        match self.0 {
            CoreCertificate::Affine { t, .. } => Some(t),
            CoreCertificate::Constant(_) => None,
        }
    }

    #[getter]
    fn h(&self) -> Option<u8> {
        match self.0 {
            CoreCertificate::Affine { h, .. } => Some(h),
            CoreCertificate::Constant(_) => None,
        }
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Certificate({})", self.0)
    }
}

/// A window `m_lo..=m_hi` of an S^2_p Sudoku board.
#[pyclass(name = "Board")]
struct PyBoard {
    board: sudoku::Board,
    generator: Option<(i64, i64, i64)>,
}

impl PyBoard {
    fn plain(board: sudoku::Board) -> Self {
        PyBoard { board, generator: None }
    }
}

#[pymethods]
impl PyBoard {
    /// `F(n, m) = f_p(an + bm + c)` on rows `m_lo..=m_hi`.
    #[staticmethod]
    fn gen_affine(p: u64, m_lo: i64, m_hi: i64, a: i64, b: i64, c: i64) -> PyResult<Self> {
        let params = PadicParams::s2(p).map_err(err)?;
        let board = sudoku::gen_affine(params, m_lo, m_hi, a, b, c).map_err(err)?;
        Ok(PyBoard {
            board,
            generator: Some((a, b, c)),
        })
    }

    /// Parses the `board v1` text format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let file = io::parse_board_file(text).map_err(err)?;
        Ok(PyBoard {
            board: file.board,
            generator: file.generator,
        })
    }

    fn to_text(&self) -> String {
        io::write_board_file(&io::BoardFile {
            board: self.board.clone(),
            generator: self.generator,
        })
    }

    #[getter]
    fn p(&self) -> u64 {
        self.board.p()
    }

    #[getter]
    fn width(&self) -> usize {
        self.board.width()
    }

    #[getter]
    fn m_lo(&self) -> i64 {
        self.board.m_lo()
    }

    #[getter]
    fn m_hi(&self) -> i64 {
        self.board.m_hi()
    }

    #[getter]
    fn generator(&self) -> Option<(i64, i64, i64)> {
        self.generator
    }

    fn get(&self, n: usize, m: i64) -> Option<u8> {
        self.board.get(n, m)
    }

    /// Rows in ascending `m`.
    fn rows(&self) -> Vec<Vec<u8>> {
        self.board.cells().chunks(self.board.width()).map(<[u8]>::to_vec).collect()
    }

    /// Verifies all visible lines; returns `(ok, full_lines, failed_lines)`.
    #[pyo3(signature = (extend_partial = false))]
    fn verify(&self, extend_partial: bool) -> (bool, u64, u64) {
        let mode = if extend_partial {
            VerifyMode::ExtendPartial
        } else {
            VerifyMode::FullOnly
        };
        let r = sudoku::verify_board(&self.board, mode);
        (r.ok(), r.full_lines, r.failed_lines)
    }

    /// Least `(A, B, C)` with every line affine in it.
    fn fit(&self) -> PyResult<(u64, u64, u64)> {
        let f = fit_board(&self.board).map_err(err)?;
        Ok((f.a, f.b, f.c))
    }

    /// `F_1(n, m) = F(n, pm)` on the rows that fit.
    fn tetris(&self) -> PyResult<PyBoard> {
        tetris(&self.board).map(PyBoard::plain).map_err(err)
    }

    /// Fits per scale and whether consecutive scales match.
    #[pyo3(signature = (depth, normalize = false))]
    fn scales(&self, depth: usize, normalize: bool) -> PyResult<(Vec<(u64, u64, u64)>, bool)> {
        let mode = if normalize { ScaleMode::Normalized } else { ScaleMode::Raw };
        let r = scale_report(&self.board, depth, mode).map_err(err)?;
        let fits = r.scales.iter().map(|s| (s.fit.a, s.fit.b, s.fit.c)).collect();
        Ok((fits, r.all_match()))
    }

    /// Per column, the witness row against each period `1..=q_max` (None if constant).
    fn column_witnesses(&self, q_max: u64) -> PyResult<Vec<Option<Vec<Option<i64>>>>> {
        let r = sudoku::column_report(&self.board, q_max).map_err(err)?;
        Ok(r.columns
            .iter()
            .map(|c| (!c.constant).then(|| c.periods.iter().map(|v| v.witness).collect()))
            .collect())
    }

    /// ASCII or PGM picture; shaded by valuation when a generator is known.
    #[pyo3(signature = (format = "ascii", by_value = false))]
    fn render(&self, format: &str, by_value: bool) -> PyResult<String> {
        let shading = match (by_value, self.generator) {
            (false, Some((a, b, c))) => Shading::Valuation { a, b, c },
            _ => Shading::Value,
        };
        match format.parse().map_err(err)? {
            tileforge::render::Format::Ascii => Ok(render_ascii(&self.board, shading)),
            tileforge::render::Format::Pgm => render_pgm(&self.board, shading, 1).map_err(err),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "Board(p={}, m_lo={}, m_hi={})",
            self.board.p(),
            self.board.m_lo(),
            self.board.m_hi()
        )
    }
}

/// `f_p(n)`: the last non-zero base-`p` digit of `n`, with `f_p(0) = 1`.
#[pyfunction]
fn fp(p: u64, n: i64) -> u64 {
    padic::fp(p, n)
}

/// `nu_p(n)`, or None for `n = 0`.
#[pyfunction]
fn nu(p: u64, n: i64) -> Option<u32> {
    match padic::nu(p, n) {
        Valuation::Finite(e) => Some(e),
        Valuation::Infinite => None,
    }
}

/// Certificate of membership in S^r_p for a line of `p^2` values, or None.
#[pyfunction]
#[pyo3(signature = (p, values, r = 2))]
fn classify(p: u64, values: Vec<u8>, r: u32) -> PyResult<Option<PyCertificate>> {
    let params = PadicParams::new(p, r).map_err(err)?;
    let line = padic::LineFunction::new(&params, values).map_err(err)?;
    Ok(Classifier::new(params).classify(line.values()).map(PyCertificate))
}

/// Checks a tiling-instance file's candidate; returns `(ok, defects)` with
/// defects as `(tile, point, count)`.
#[pyfunction]
fn verify_tiling(instance: &str) -> PyResult<(bool, Vec<(usize, String, usize)>)> {
    let inst = io::parse_instance(instance).map_err(err)?;
    let a = inst
        .candidate()
        .map_err(err)?
        .ok_or_else(|| TileforgeError::new_err("instance has no residues line"))?;
    let r = tiling::verify_tiling(&a, &inst.tiles).map_err(err)?;
    let defects = r.defects.iter().map(|d| (d.tile, d.point.to_string(), d.count)).collect();
    Ok((r.ok(), defects))
}

/// All tilings of a finite instance's group by its tiles, as element literals.
#[pyfunction]
#[pyo3(signature = (instance, budget = None))]
fn enumerate_tilings(instance: &str, budget: Option<u64>) -> PyResult<(Vec<Vec<String>>, bool)> {
    let inst = io::parse_instance(instance).map_err(err)?;
    let found = tiling::enumerate_tilings_of_system(&inst.group, &inst.tiles, budget).map_err(err)?;
    let tilings = found
        .tilings
        .iter()
        .map(|t| t.iter().map(|e| e.to_string()).collect())
        .collect();
    Ok((tilings, found.complete))
}

/// Intersective partition as `partition v1` text.
#[pyfunction]
#[pyo3(signature = (group, parts = 2, seed = 0, budget = 1_000_000, exhaustive = false))]
fn find_intersective_partition(group: &PyGroup, parts: usize, seed: u64, budget: u64, exhaustive: bool) -> PyResult<String> {
    let search = PartitionSearch { seed, budget, exhaustive };
    let found = tiling::find_intersective_partition(&group.0, parts, &search).map_err(err)?;
    Ok(io::write_partition(&found.partition))
}

/// Number of intersective conditions violated by a `partition v1` text.
#[pyfunction]
fn intersective_violations(partition: &str) -> PyResult<usize> {
    let p = io::parse_partition(partition).map_err(err)?;
    Ok(tiling::verify_intersective(&p).map_err(err)?.violations.len())
}

/// Stacks an instance's tiles with a partition; returns the new instance text.
#[pyfunction]
fn stack(instance: &str, partition: &str) -> PyResult<String> {
    let inst = io::parse_instance(instance).map_err(err)?;
    let p = io::parse_partition(partition).map_err(err)?;
    let tile = tiling::stack(&inst.tiles, &p).map_err(err)?;
    let zero = p.group().zero();
    Ok(io::write_instance(&io::TilingInstance {
        group: tile.group().clone(),
        lattice: inst.lattice.clone(),
        residues: inst.residues.map(|r| r.iter().map(|x| x.join(&zero)).collect()),
        tiles: vec![tile],
    }))
}

/// Exhaustive equation-versus-tiling comparison on `Z/L`; returns `(ok, report)`.
#[pyfunction]
#[pyo3(signature = (encoder, l, q = 3, n = 3, a = vec![1], fiber = 2, v = 1))]
fn encoder_check(encoder: &str, l: u64, q: u64, n: u64, a: Vec<i64>, fiber: u64, v: i64) -> PyResult<(bool, String)> {
    let e = match encoder {
        "periodicity" => {
            let base = GroupSpec::free_abelian(1);
            let fiber = GroupSpec::cyclic(fiber).map_err(err)?;
            let v = base.normalize(&[v], &[]).map_err(err)?;
            encode_periodicity(&base, &fiber, &v)
        }
        "shift" => encode_shifted_mod(n),
        "linear" => encode_linear(a.len(), q, &a),
        "boolpair" => encode_boolean_pair(q),
        other => return Err(TileforgeError::new_err(format!("unknown encoder `{other}`"))),
    }
    .map_err(err)?;
    let r = encoder_equivalence_check(&e, l).map_err(err)?;
    Ok((r.ok(), r.to_string()))
}

/// Counts from the exhaustive alignment search: `(checked, hypotheses_held, counterexamples)`.
#[pyfunction]
#[pyo3(signature = (q, max_points = 6))]
fn alignment_counts(py: Python<'_>, q: u64, max_points: usize) -> PyResult<(u64, u64, u64)> {
    let s = py.detach(|| alignment_search(q, max_points, 0)).map_err(err)?;
    Ok((s.checked, s.hypotheses_held, s.counterexamples))
}

#[pymodule]
#[pyo3(name = "tileforge")]
pub fn tileforge_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("TileforgeError", m.py().get_type::<TileforgeError>())?;
    m.add_class::<PyGroup>()?;
    m.add_class::<PyCertificate>()?;
    m.add_class::<PyBoard>()?;
    m.add_function(wrap_pyfunction!(fp, m)?)?;
    m.add_function(wrap_pyfunction!(nu, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(verify_tiling, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_tilings, m)?)?;
    m.add_function(wrap_pyfunction!(find_intersective_partition, m)?)?;
    m.add_function(wrap_pyfunction!(intersective_violations, m)?)?;
    m.add_function(wrap_pyfunction!(stack, m)?)?;
    m.add_function(wrap_pyfunction!(encoder_check, m)?)?;
    m.add_function(wrap_pyfunction!(alignment_counts, m)?)?;
    Ok(())
}
