//! Response logs, Q-matrix, filtering, per-student splitting and the
//! dataset summary statistics.
//!
//! File formats (UTF-8 CSV with a header row):
//!
//! * logs: `student_id,exercise_id,score` with `score ∈ [0,1]`
//! * Q-matrix: `exercise_id,concept_id`, one row per relevant pair
//! * ID maps: `kind,index,id` with `kind ∈ {student, exercise, concept}`
//!
//! External IDs are arbitrary strings; they are mapped to dense indices in
//! order of first appearance.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numeric::{Matrix, Rng};

/// One `(student, exercise, score)` interaction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResponseLog {
    pub student: usize,
    pub exercise: usize,
    pub score: f64,
}

impl ResponseLog {
    pub fn new(student: usize, exercise: usize, score: f64) -> Self {
        ResponseLog {
            student,
            exercise,
            score,
        }
    }
}

/// Bidirectional map between external string IDs and dense indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IdMap {
    index: HashMap<String, usize>,
    names: Vec<String>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Map with names `"{prefix}{i}"` for `i in 0..n`.
    pub fn sequential(prefix: &str, n: usize) -> Self {
        let mut map = IdMap::new();
        for i in 0..n {
            map.get_or_insert(&format!("{prefix}{i}"));
        }
        map
    }

    pub fn get_or_insert(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len();
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), i);
        i
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IdMaps {
    pub students: IdMap,
    pub exercises: IdMap,
    pub concepts: IdMap,
}

impl IdMaps {
    pub fn sequential(n_students: usize, n_exercises: usize, n_concepts: usize) -> Self {
        IdMaps {
            students: IdMap::sequential("s", n_students),
            exercises: IdMap::sequential("e", n_exercises),
            concepts: IdMap::sequential("k", n_concepts),
        }
    }
}

/// Binary exercise × concept relevancy matrix stored as sorted concept lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QMatrix {
    n_concepts: usize,
    rows: Vec<Vec<usize>>,
}

impl QMatrix {
    pub fn empty(n_exercises: usize, n_concepts: usize) -> Self {
        QMatrix {
            n_concepts,
            rows: vec![Vec::new(); n_exercises],
        }
    }

    pub fn from_pairs(
        n_exercises: usize,
        n_concepts: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut q = QMatrix::empty(n_exercises, n_concepts);
        for (e, k) in pairs {
            q.insert(e, k)?;
        }
        Ok(q)
    }

    /// Sets entry `(exercise, concept)` to 1. Idempotent.
    pub fn insert(&mut self, exercise: usize, concept: usize) -> Result<()> {
        if exercise >= self.rows.len() {
            return Err(Error::Index {
                kind: "exercise",
                index: exercise,
                len: self.rows.len(),
            });
        }
        if concept >= self.n_concepts {
            return Err(Error::Index {
                kind: "concept",
                index: concept,
                len: self.n_concepts,
            });
        }
        let row = &mut self.rows[exercise];
        if let Err(pos) = row.binary_search(&concept) {
            row.insert(pos, concept);
        }
        Ok(())
    }

    pub fn remove(&mut self, exercise: usize, concept: usize) {
        if let Ok(pos) = self.rows[exercise].binary_search(&concept) {
            self.rows[exercise].remove(pos);
        }
    }

    pub fn n_exercises(&self) -> usize {
        self.rows.len()
    }

    pub fn n_concepts(&self) -> usize {
        self.n_concepts
    }

    pub fn concepts(&self, exercise: usize) -> &[usize] {
        &self.rows[exercise]
    }

    pub fn contains(&self, exercise: usize, concept: usize) -> bool {
        self.rows[exercise].binary_search(&concept).is_ok()
    }

    pub fn dense_row(&self, exercise: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.n_concepts];
        for &k in &self.rows[exercise] {
            row[k] = 1.0;
        }
        row
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.rows.len(), self.n_concepts);
        for (e, row) in self.rows.iter().enumerate() {
            for &k in row {
                m.set(e, k, 1.0);
            }
        }
        m
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(e, row)| row.iter().map(move |&k| (e, k)))
    }

    pub fn n_pairs(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Exercises containing `concept`, ascending.
    pub fn exercises_of(&self, concept: usize) -> Vec<usize> {
        (0..self.rows.len()).filter(|&e| self.contains(e, concept)).collect()
    }

    /// Mean row size over exercises with at least one concept.
    pub fn concepts_per_exercise(&self) -> f64 {
        let labelled: Vec<usize> = self.rows.iter().map(Vec::len).filter(|&n| n > 0).collect();
        if labelled.is_empty() {
            return 0.0;
        }
        labelled.iter().sum::<usize>() as f64 / labelled.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub logs: Vec<ResponseLog>,
    pub q: QMatrix,
    pub ids: IdMaps,
}

impl Dataset {
    /// Checks index bounds and that every answered exercise has a concept.
    pub fn new(logs: Vec<ResponseLog>, q: QMatrix, ids: IdMaps) -> Result<Self> {
        let ds = Dataset { logs, q, ids };
        ds.validate()?;
        Ok(ds)
    }

    pub fn n_students(&self) -> usize {
        self.ids.students.len()
    }

    pub fn n_exercises(&self) -> usize {
        self.q.n_exercises()
    }

    pub fn n_concepts(&self) -> usize {
        self.q.n_concepts()
    }

    fn validate(&self) -> Result<()> {
        let (n, m) = (self.n_students(), self.n_exercises());
        if self.ids.exercises.len() != m {
            return Err(Error::data(format!(
                "{} exercise ids but Q-matrix has {m} rows",
                self.ids.exercises.len()
            )));
        }
        if self.ids.concepts.len() != self.q.n_concepts() {
            return Err(Error::data(format!(
                "{} concept ids but Q-matrix has {} columns",
                self.ids.concepts.len(),
                self.q.n_concepts()
            )));
        }
        for log in &self.logs {
            if log.student >= n {
                return Err(Error::Index {
                    kind: "student",
                    index: log.student,
                    len: n,
                });
            }
            if log.exercise >= m {
                return Err(Error::Index {
                    kind: "exercise",
                    index: log.exercise,
                    len: m,
                });
            }
            check_score(log.score).map_err(Error::Data)?;
            if self.q.concepts(log.exercise).is_empty() {
                return Err(no_concepts(&self.ids, log.exercise));
            }
        }
        Ok(())
    }

    pub fn logs_per_student(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_students()];
        for log in &self.logs {
            counts[log.student] += 1;
        }
        counts
    }
}

fn no_concepts(ids: &IdMaps, exercise: usize) -> Error {
    let name = ids
        .exercises
        .name(exercise)
        .map_or_else(|| exercise.to_string(), str::to_owned);
    Error::data(format!("exercise {name} has no concepts"))
}

fn check_score(score: f64) -> Result<(), String> {
    if (0.0..=1.0).contains(&score) {
        Ok(())
    } else {
        Err(format!("score {score} outside [0,1]"))
    }
}

pub(crate) fn csv_reader<R: io::Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader)
}

pub(crate) fn check_header(rdr: &mut csv::Reader<impl io::Read>, source: &Path, expected: &[&str]) -> Result<()> {
    let header = rdr.headers()?.clone();
    let got: Vec<&str> = header.iter().collect();
    // an empty file has no header at all
    if got.is_empty() || got == [""] {
        return Ok(());
    }
    if got.len() < expected.len() || got[..expected.len()] != *expected {
        return Err(Error::Parse {
            path: source.to_owned(),
            line: 1,
            message: format!("expected header `{}`, found `{}`", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

pub(crate) fn field<'r>(rec: &'r csv::StringRecord, i: usize, source: &Path, line: u64) -> Result<&'r str> {
    match rec.get(i) {
        Some(s) if !s.is_empty() => Ok(s),
        _ => Err(Error::Parse {
            path: source.to_owned(),
            line,
            message: format!("missing column {}", i + 1),
        }),
    }
}

pub(crate) fn record_line(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

/// Reads `student_id,exercise_id,score` rows, extending `ids` with unseen IDs.
pub fn read_logs<R: io::Read>(reader: R, source: &Path, ids: &mut IdMaps) -> Result<Vec<ResponseLog>> {
    let mut rdr = csv_reader(reader);
    check_header(&mut rdr, source, &["student_id", "exercise_id", "score"])?;
    let mut logs = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = record_line(&rec);
        let student = field(&rec, 0, source, line)?;
        let exercise = field(&rec, 1, source, line)?;
        let raw = field(&rec, 2, source, line)?;
        let score: f64 = raw.parse().map_err(|_| Error::Parse {
            path: source.to_owned(),
            line,
            message: format!("score `{raw}` is not a number"),
        })?;
        check_score(score).map_err(|m| Error::data(format!("{}:{line}: {m}", source.display())))?;
        logs.push(ResponseLog {
            student: ids.students.get_or_insert(student),
            exercise: ids.exercises.get_or_insert(exercise),
            score,
        });
    }
    Ok(logs)
}

pub fn load_logs(path: impl AsRef<Path>, ids: &mut IdMaps) -> Result<Vec<ResponseLog>> {
    let path = path.as_ref();
    read_logs(std::fs::File::open(path)?, path, ids)
}

/// Reads `exercise_id,concept_id` pairs. Every exercise already referenced by
/// `logs` must end up with at least one concept.
pub fn read_qmatrix<R: io::Read>(reader: R, source: &Path, ids: &mut IdMaps, logs: &[ResponseLog]) -> Result<QMatrix> {
    let mut rdr = csv_reader(reader);
    check_header(&mut rdr, source, &["exercise_id", "concept_id"])?;
    let mut pairs = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = record_line(&rec);
        let e = ids.exercises.get_or_insert(field(&rec, 0, source, line)?);
        let k = ids.concepts.get_or_insert(field(&rec, 1, source, line)?);
        pairs.push((e, k));
    }
    let q = QMatrix::from_pairs(ids.exercises.len(), ids.concepts.len(), pairs)?;
    let mut answered: Vec<usize> = logs.iter().map(|l| l.exercise).collect();
    answered.sort_unstable();
    answered.dedup();
    if let Some(&e) = answered.iter().find(|&&e| q.concepts(e).is_empty()) {
        return Err(no_concepts(ids, e));
    }
    Ok(q)
}

pub fn load_qmatrix(path: impl AsRef<Path>, ids: &mut IdMaps, logs: &[ResponseLog]) -> Result<QMatrix> {
    let path = path.as_ref();
    read_qmatrix(std::fs::File::open(path)?, path, ids, logs)
}

/// Loads a log file and a Q-matrix file into a validated [`Dataset`].
pub fn load_dataset(logs: impl AsRef<Path>, qmatrix: impl AsRef<Path>) -> Result<Dataset> {
    let mut ids = IdMaps::default();
    let logs = load_logs(logs, &mut ids)?;
    let q = load_qmatrix(qmatrix, &mut ids, &logs)?;
    Dataset::new(logs, q, ids)
}

pub fn write_logs<W: io::Write>(writer: W, logs: &[ResponseLog], ids: &IdMaps) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["student_id", "exercise_id", "score"])?;
    for log in logs {
        w.write_record([
            ids.students.name(log.student).unwrap_or_default(),
            ids.exercises.name(log.exercise).unwrap_or_default(),
            &log.score.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_qmatrix<W: io::Write>(writer: W, q: &QMatrix, ids: &IdMaps) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["exercise_id", "concept_id"])?;
    for (e, k) in q.pairs() {
        w.write_record([
            ids.exercises.name(e).unwrap_or_default(),
            ids.concepts.name(k).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

const ID_KINDS: [&str; 3] = ["student", "exercise", "concept"];

/// Writes every dense index with its external ID, so a model trained on
/// these indices can be applied to new files.
pub fn write_id_maps<W: io::Write>(writer: W, ids: &IdMaps) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["kind", "index", "id"])?;
    for (kind, map) in ID_KINDS.iter().zip([&ids.students, &ids.exercises, &ids.concepts]) {
        for (i, name) in map.names().iter().enumerate() {
            w.write_record([*kind, &i.to_string(), name.as_str()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`write_id_maps`]; indices of each kind must
/// appear in order starting from 0.
pub fn read_id_maps<R: io::Read>(reader: R, source: &Path) -> Result<IdMaps> {
    let mut rdr = csv_reader(reader);
    check_header(&mut rdr, source, &["kind", "index", "id"])?;
    let mut ids = IdMaps::default();
    for rec in rdr.records() {
        let rec = rec?;
        let line = record_line(&rec);
        let parse_err = |message: String| Error::Parse {
            path: source.to_owned(),
            line,
            message,
        };
        let kind = field(&rec, 0, source, line)?;
        let index = field(&rec, 1, source, line)?;
        let name = field(&rec, 2, source, line)?;
        let map = match kind {
            "student" => &mut ids.students,
            "exercise" => &mut ids.exercises,
            "concept" => &mut ids.concepts,
            other => return Err(parse_err(format!("unknown id kind `{other}`"))),
        };
        let index: usize = index.parse().map_err(|_| parse_err(format!("bad index `{index}`")))?;
        if index != map.len() || map.get(name).is_some() {
            return Err(parse_err(format!(
                "{kind} `{name}` has index {index}, expected {} and a new id",
                map.len()
            )));
        }
        map.get_or_insert(name);
    }
    Ok(ids)
}

pub fn load_id_maps(path: impl AsRef<Path>) -> Result<IdMaps> {
    let path = path.as_ref();
    read_id_maps(std::fs::File::open(path)?, path)
}

/// Drops students with fewer than `min_logs` logs and re-densifies student
/// indices in their original order. Exercises are left untouched.
pub fn filter_students(ds: &Dataset, min_logs: usize) -> Dataset {
    let counts = ds.logs_per_student();
    let mut remap = vec![None; counts.len()];
    let mut students = IdMap::new();
    for (s, &c) in counts.iter().enumerate() {
        if c >= min_logs {
            let name = ds.ids.students.name(s).expect("dense student index");
            remap[s] = Some(students.get_or_insert(name));
        }
    }
    let logs = ds
        .logs
        .iter()
        .filter_map(|l| remap[l.student].map(|s| ResponseLog { student: s, ..*l }))
        .collect();
    Dataset {
        logs,
        q: ds.q.clone(),
        ids: IdMaps {
            students,
            ..ds.ids.clone()
        },
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitDataset {
    pub train: Vec<ResponseLog>,
    pub test: Vec<ResponseLog>,
    pub seed: u64,
    pub n_students: usize,
    pub n_exercises: usize,
}

/// Number of a student's `n` logs that go to the training side.
pub fn train_count(n: usize, fraction: f64) -> usize {
    let raw = (fraction * n as f64 - 1e-9).ceil() as usize;
    raw.clamp(1, n.saturating_sub(1))
}

/// Per-student split: each student's logs are put in a canonical order,
/// shuffled by a stream derived from `(seed, student)`, and the first
/// [`train_count`] go to train. The result does not depend on input row order.
pub fn split_per_student(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<SplitDataset> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::config(format!(
            "train fraction must be in (0,1), got {train_fraction}"
        )));
    }
    let mut per_student: Vec<Vec<ResponseLog>> = vec![Vec::new(); ds.n_students()];
    for log in &ds.logs {
        per_student[log.student].push(*log);
    }
    let root = Rng::new(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (s, mut logs) in per_student.into_iter().enumerate() {
        if logs.is_empty() {
            continue;
        }
        if logs.len() < 2 {
            let name = ds.ids.students.name(s).unwrap_or("?");
            return Err(Error::data(format!(
                "student {name} has {} log(s); a split needs at least 2",
                logs.len()
            )));
        }
        logs.sort_by(|a, b| a.exercise.cmp(&b.exercise).then(a.score.total_cmp(&b.score)));
        root.fork(s as u64).shuffle(&mut logs);
        let cut = train_count(logs.len(), train_fraction);
        test.extend_from_slice(&logs[cut..]);
        logs.truncate(cut);
        train.extend(logs);
    }
    Ok(SplitDataset {
        train,
        test,
        seed,
        n_students: ds.n_students(),
        n_exercises: ds.n_exercises(),
    })
}

/// `Log(i,j)`: number of logs of student `i` on exercises containing concept `j`.
fn concept_cells(ds: &Dataset) -> BTreeMap<(usize, usize), Vec<f64>> {
    let mut cells: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for log in &ds.logs {
        for &k in ds.q.concepts(log.exercise) {
            cells.entry((log.student, k)).or_default().push(log.score);
        }
    }
    cells
}

/// Average number of logs per non-empty (student, concept) cell.
pub fn avg_logs_per_concept(ds: &Dataset) -> Result<f64> {
    let cells = concept_cells(ds);
    if cells.is_empty() {
        return Err(Error::data("no logs"));
    }
    let total: usize = cells.values().map(Vec::len).sum();
    Ok(total as f64 / cells.len() as f64)
}

/// Mean over students of the mean population standard deviation of scores
/// across that student's concept cells holding more than one log. Students
/// without such a cell are left out of the outer mean.
pub fn std_scores_repeated(ds: &Dataset) -> Result<f64> {
    let mut per_student: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for ((s, _), scores) in concept_cells(ds) {
        if scores.len() < 2 {
            continue;
        }
        let n = scores.len() as f64;
        let mean = scores.iter().sum::<f64>() / n;
        let var = scores.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let acc = per_student.entry(s).or_default();
        acc.0 += var.sqrt();
        acc.1 += 1;
    }
    if per_student.is_empty() {
        return Err(Error::data("no student has more than one log on any concept"));
    }
    let sum: f64 = per_student.values().map(|&(sum, n)| sum / n as f64).sum();
    Ok(sum / per_student.len() as f64)
}

/// Summary statistics in the layout of the usual dataset table.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetStats {
    pub n_students: usize,
    pub n_exercises: usize,
    pub n_concepts: usize,
    pub n_logs: usize,
    pub concepts_per_exercise: f64,
    pub avg_logs_per_concept: Option<f64>,
    pub std_scores_repeated: Option<f64>,
}

impl DatasetStats {
    pub fn compute(ds: &Dataset) -> Self {
        DatasetStats {
            n_students: ds.n_students(),
            n_exercises: ds.n_exercises(),
            n_concepts: ds.n_concepts(),
            n_logs: ds.logs.len(),
            concepts_per_exercise: ds.q.concepts_per_exercise(),
            avg_logs_per_concept: avg_logs_per_concept(ds).ok(),
            std_scores_repeated: std_scores_repeated(ds).ok(),
        }
    }

    fn fields(&self) -> Vec<(&'static str, &'static str, String)> {
        let opt = |v: Option<f64>, prec: usize| v.map_or("NA".to_owned(), |x| format!("{x:.prec$}"));
        vec![
            ("#Students", "n_students", self.n_students.to_string()),
            ("#Exercises", "n_exercises", self.n_exercises.to_string()),
            ("#Knowledge concepts", "n_concepts", self.n_concepts.to_string()),
            ("#Response logs", "n_logs", self.n_logs.to_string()),
            (
                "#Knowledge concepts per exercise",
                "concepts_per_exercise",
                format!("{:.2}", self.concepts_per_exercise),
            ),
            ("AVG_#log", "avg_logs_per_concept", opt(self.avg_logs_per_concept, 2)),
            ("STD_#log>1", "std_scores_repeated", opt(self.std_scores_repeated, 3)),
        ]
    }

    /// `key=value` lines for scripts.
    pub fn key_values(&self) -> String {
        self.fields()
            .into_iter()
            .map(|(_, key, value)| format!("{key}={value}\n"))
            .collect()
    }
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fields = self.fields();
        let width = fields.iter().map(|(label, _, _)| label.len()).max().unwrap_or(0);
        for (label, _, value) in fields {
            writeln!(f, "{label:<width$}  {value:>10}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn src() -> &'static Path {
        Path::new("test.csv")
    }

    fn dataset(logs: &[(usize, usize, f64)], q_rows: &[&[usize]], k: usize) -> Dataset {
        let n = logs.iter().map(|l| l.0 + 1).max().unwrap_or(0);
        let q = QMatrix::from_pairs(
            q_rows.len(),
            k,
            q_rows
                .iter()
                .enumerate()
                .flat_map(|(e, r)| r.iter().map(move |&c| (e, c))),
        )
        .unwrap();
        let logs = logs.iter().map(|&(s, e, r)| ResponseLog::new(s, e, r)).collect();
        Dataset::new(logs, q, IdMaps::sequential(n, q_rows.len(), k)).unwrap()
    }

    #[test]
    fn id_maps_roundtrip() {
        let mut ids = IdMaps::sequential(2, 3, 1);
        ids.students.get_or_insert("with,comma");
        let mut buf = Vec::new();
        write_id_maps(&mut buf, &ids).unwrap();
        assert_eq!(read_id_maps(buf.as_slice(), src()).unwrap(), ids);
        let gap = "kind,index,id\nstudent,1,s1\n";
        assert!(read_id_maps(gap.as_bytes(), src()).is_err());
        let dup = "kind,index,id\nstudent,0,s1\nstudent,1,s1\n";
        assert!(read_id_maps(dup.as_bytes(), src()).is_err());
    }

    #[test]
    fn load_logs_basic() {
        let mut ids = IdMaps::default();
        let data = "student_id,exercise_id,score\ns1,e1,1\ns1,e2,0\n";
        let logs = read_logs(data.as_bytes(), src(), &mut ids).unwrap();
        assert_eq!(logs.len(), 2);
        assert_eq!(ids.students.len(), 1);
        assert_eq!(ids.exercises.len(), 2);
        assert_eq!(logs[1], ResponseLog::new(0, 1, 0.0));
    }

    #[test]
    fn load_logs_empty_file() {
        let mut ids = IdMaps::default();
        assert!(read_logs("".as_bytes(), src(), &mut ids).unwrap().is_empty());
        let header_only = "student_id,exercise_id,score\n";
        assert!(read_logs(header_only.as_bytes(), src(), &mut ids).unwrap().is_empty());
    }

    #[test]
    fn load_logs_rejects_bad_rows() {
        let mut ids = IdMaps::default();
        let err = read_logs("student_id,exercise_id,score\ns1,e1,1.5\n".as_bytes(), src(), &mut ids).unwrap_err();
        assert!(matches!(err, Error::Data(_)), "{err}");

        let err = read_logs(
            "student_id,exercise_id,score\ns1,e1,1\ns2,e1,abc\n".as_bytes(),
            src(),
            &mut ids,
        )
        .unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn existing_maps_are_extended_not_reset() {
        let mut ids = IdMaps::default();
        read_logs("student_id,exercise_id,score\na,x,1\n".as_bytes(), src(), &mut ids).unwrap();
        let logs = read_logs(
            "student_id,exercise_id,score\nb,x,0\na,y,1\n".as_bytes(),
            src(),
            &mut ids,
        )
        .unwrap();
        assert_eq!(logs[0], ResponseLog::new(1, 0, 0.0));
        assert_eq!(logs[1], ResponseLog::new(0, 1, 1.0));
    }

    #[test]
    fn qmatrix_rows_and_dedup() {
        let mut ids = IdMaps::default();
        let data = "exercise_id,concept_id\ne1,k1\ne1,k2\ne2,k1\ne1,k1\n";
        let q = read_qmatrix(data.as_bytes(), src(), &mut ids, &[]).unwrap();
        assert_eq!(q.dense_row(0), vec![1.0, 1.0]);
        assert_eq!(q.dense_row(1), vec![1.0, 0.0]);
        assert_eq!(q.n_pairs(), 3);
    }

    #[test]
    fn qmatrix_missing_exercise_is_named() {
        let mut ids = IdMaps::default();
        let logs = read_logs(
            "student_id,exercise_id,score\ns1,e1,1\ns1,e3,0\n".as_bytes(),
            src(),
            &mut ids,
        )
        .unwrap();
        let err = read_qmatrix("exercise_id,concept_id\ne1,k1\n".as_bytes(), src(), &mut ids, &logs).unwrap_err();
        assert_eq!(err.to_string(), "invalid data: exercise e3 has no concepts");
    }

    #[test]
    fn filter_thresholds() {
        let mut logs = vec![];
        for i in 0..5 {
            logs.push((0, i % 2, 1.0));
        }
        for i in 0..20 {
            logs.push((1, i % 2, 0.0));
        }
        let ds = dataset(&logs, &[&[0], &[1]], 2);
        let f = filter_students(&ds, 15);
        assert_eq!(f.n_students(), 1);
        assert_eq!(f.ids.students.name(0), Some("s1"));
        assert!(f.logs.iter().all(|l| l.student == 0 && l.score == 0.0));
        assert_eq!(f.n_exercises(), 2);
        assert_eq!(filter_students(&ds, 0), ds);

        let ds29 = dataset(&vec![(0, 0, 1.0); 29], &[&[0]], 1);
        assert_eq!(filter_students(&ds29, 30).n_students(), 0);
        assert_eq!(filter_students(&ds29, 29).n_students(), 1);
    }

    #[test]
    fn train_count_rule() {
        // hand-enumerated: ceil(0.8 n) clamped to [1, n-1]
        let expected = [(2, 1), (3, 2), (4, 3), (5, 4), (6, 5), (7, 6), (8, 7), (9, 8), (10, 8)];
        for (n, t) in expected {
            assert_eq!(train_count(n, 0.8), t, "n={n}");
        }
        assert_eq!(train_count(20, 0.8), 16);
        assert_eq!(train_count(2, 0.01), 1);
    }

    #[test]
    fn split_counts_and_determinism() {
        let mut logs = vec![];
        for e in 0..10 {
            logs.push((0, e, (e % 2) as f64));
        }
        for e in 0..3 {
            logs.push((1, e, 1.0));
        }
        let rows: Vec<&[usize]> = vec![&[0]; 10];
        let ds = dataset(&logs, &rows, 1);
        let split = split_per_student(&ds, 0.8, 3).unwrap();
        let count = |v: &[ResponseLog], s| v.iter().filter(|l| l.student == s).count();
        assert_eq!((count(&split.train, 0), count(&split.test, 0)), (8, 2));
        assert_eq!((count(&split.train, 1), count(&split.test, 1)), (2, 1));
        assert_eq!(split, split_per_student(&ds, 0.8, 3).unwrap());
        assert_ne!(split.train, split_per_student(&ds, 0.8, 4).unwrap().train);
    }

    #[test]
    fn split_rejects_single_log_students_and_bad_fraction() {
        let ds = dataset(&[(0, 0, 1.0), (1, 0, 1.0), (1, 0, 0.0)], &[&[0]], 1);
        assert!(matches!(split_per_student(&ds, 0.8, 0), Err(Error::Data(_))));
        assert!(matches!(split_per_student(&ds, 1.0, 0), Err(Error::Config(_))));
    }

    #[test]
    fn avg_logs_examples() {
        let ds = dataset(&[(0, 0, 1.0), (0, 0, 0.0)], &[&[0]], 1);
        assert_eq!(avg_logs_per_concept(&ds).unwrap(), 2.0);
        let ds = dataset(&[(0, 0, 1.0)], &[&[0, 1]], 2);
        assert_eq!(avg_logs_per_concept(&ds).unwrap(), 1.0);
        let empty = dataset(&[], &[&[0]], 1);
        assert_eq!(
            avg_logs_per_concept(&empty).unwrap_err().to_string(),
            "invalid data: no logs"
        );
    }

    #[test]
    fn std_examples() {
        let ds = dataset(&[(0, 0, 1.0), (0, 1, 1.0)], &[&[0], &[0]], 1);
        assert_eq!(std_scores_repeated(&ds).unwrap(), 0.0);
        let ds = dataset(&[(0, 0, 1.0), (0, 1, 0.0)], &[&[0], &[0]], 1);
        assert_eq!(std_scores_repeated(&ds).unwrap(), 0.5);
        let single = dataset(&[(0, 0, 1.0)], &[&[0]], 1);
        assert!(std_scores_repeated(&single).is_err());
    }

    #[test]
    fn stats_concepts_per_exercise() {
        let ds = dataset(&[(0, 0, 1.0), (0, 1, 0.0)], &[&[0], &[0, 1]], 2);
        let stats = DatasetStats::compute(&ds);
        assert_eq!(stats.concepts_per_exercise, 1.5);
        let kv = stats.key_values();
        assert!(kv.contains("avg_logs_per_concept="));
        assert!(kv.contains("std_scores_repeated="));
        assert!(stats.to_string().contains("#Response logs"));
    }
}
