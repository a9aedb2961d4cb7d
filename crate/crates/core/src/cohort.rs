//! Cohort ingest: CSV loading, 5-year endpoint construction, row filtering
//! and the clinical / genomic predictor split.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TIME_COLUMN: &str = "overall_survival_months";
pub const CANCER_STATUS_COLUMN: &str = "death_from_cancer";
pub const OVERALL_STATUS_COLUMN: &str = "overall_survival";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match self {
            ColumnData::Numeric(v) => v[row].is_none(),
            ColumnData::Categorical(v) => v[row].is_none(),
        }
    }

    fn select(&self, rows: &[usize]) -> ColumnData {
        match self {
            ColumnData::Numeric(v) => ColumnData::Numeric(rows.iter().map(|&r| v[r]).collect()),
            ColumnData::Categorical(v) => {
                ColumnData::Categorical(rows.iter().map(|&r| v[r].clone()).collect())
            }
        }
    }

    /// Cell rendered as text, `None` when missing.
    pub fn text(&self, row: usize) -> Option<String> {
        match self {
            ColumnData::Numeric(v) => v[row].map(|x| x.to_string()),
            ColumnData::Categorical(v) => v[row].clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

impl Column {
    pub fn kind(&self) -> ColumnKind {
        match self.data {
            ColumnData::Numeric(_) => ColumnKind::Numeric,
            ColumnData::Categorical(_) => ColumnKind::Categorical,
        }
    }

    pub fn missing_count(&self) -> usize {
        (0..self.data.len()).filter(|&r| self.data.is_missing(r)).count()
    }
}

/// Immutable column-typed table with explicit missingness.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortTable {
    columns: Vec<Column>,
    n_rows: usize,
}

impl CohortTable {
    pub fn new(columns: Vec<Column>, n_rows: usize) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::DuplicateColumn(c.name.clone()));
            }
            if c.data.len() != n_rows {
                return Err(Error::InvalidInput(format!(
                    "column `{}` has {} cells, expected {n_rows}",
                    c.name,
                    c.data.len()
                )));
            }
            if let ColumnData::Numeric(v) = &c.data {
                if v.iter().flatten().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidInput(format!(
                        "column `{}` has non-finite values",
                        c.name
                    )));
                }
            }
        }
        Ok(Self { columns, n_rows })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.column(name).is_some()
    }

    /// New table with only the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> CohortTable {
        CohortTable {
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    data: c.data.select(rows),
                })
                .collect(),
            n_rows: rows.len(),
        }
    }

    /// New table with the named columns, in table order.
    pub fn select_columns<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> CohortTable {
        let keep: HashSet<&str> = names.into_iter().collect();
        CohortTable {
            columns: self
                .columns
                .iter()
                .filter(|c| keep.contains(c.name.as_str()))
                .cloned()
                .collect(),
            n_rows: self.n_rows,
        }
    }
}

fn is_missing_token(s: &str) -> bool {
    s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan")
}

fn parse_finite(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

pub fn load_cohort(path: impl AsRef<Path>) -> Result<CohortTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_cohort(file)
}

/// Parse a header-first CSV. A column is numeric when every non-missing cell
/// parses as a finite number; otherwise it is categorical.
pub fn read_cohort<R: Read>(reader: R) -> Result<CohortTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let mut seen = HashSet::new();
    for h in &header {
        if !seen.insert(h.as_str()) {
            return Err(Error::DuplicateColumn(h.clone()));
        }
    }

    let mut raw: Vec<Vec<Option<String>>> = vec![Vec::new(); header.len()];
    for record in rdr.records() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::RaggedRow {
                line: record.position().map_or(0, |p| p.line()),
                expected: header.len(),
                found: record.len(),
            });
        }
        for (cells, field) in raw.iter_mut().zip(record.iter()) {
            cells.push((!is_missing_token(field)).then(|| field.to_owned()));
        }
    }
    let n_rows = raw.first().map_or(0, Vec::len);

    let columns = header
        .into_iter()
        .zip(raw)
        .map(|(name, cells)| {
            let numeric = cells
                .iter()
                .flatten()
                .all(|s| parse_finite(s).is_some());
            let data = if numeric {
                ColumnData::Numeric(
                    cells
                        .iter()
                        .map(|c| c.as_deref().and_then(parse_finite))
                        .collect(),
                )
            } else {
                ColumnData::Categorical(cells)
            };
            Column { name, data }
        })
        .collect();
    CohortTable::new(columns, n_rows)
}

/// Per-patient follow-up, cancer-death indicator and binary 5-year outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointVector {
    pub horizon: f64,
    /// Follow-up in months; `None` when the cell was missing.
    pub time: Vec<Option<f64>>,
    /// Cancer-death indicator; `None` when the status label was unrecognized.
    pub event: Vec<Option<u8>>,
    pub y: Vec<Option<u8>>,
}

impl EndpointVector {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    fn select(&self, rows: &[usize]) -> EndpointVector {
        EndpointVector {
            horizon: self.horizon,
            time: rows.iter().map(|&r| self.time[r]).collect(),
            event: rows.iter().map(|&r| self.event[r]).collect(),
            y: rows.iter().map(|&r| self.y[r]).collect(),
        }
    }

    /// Observed `(time, event)` pairs; panics if any is missing, which cannot
    /// happen after [`filter_cohort`].
    pub fn survival(&self) -> (Vec<f64>, Vec<u8>) {
        let t = self.time.iter().map(|t| t.expect("filtered")).collect();
        let e = self.event.iter().map(|e| e.expect("filtered")).collect();
        (t, e)
    }

    pub fn labels(&self) -> Vec<u8> {
        self.y.iter().map(|y| y.expect("filtered")).collect()
    }
}

/// Four-case 5-year rule.
pub fn five_year_label(time: f64, event: u8, horizon: f64) -> Option<u8> {
    match event {
        1 if time <= horizon => Some(1),
        1 => Some(0),
        0 if time >= horizon => Some(0),
        _ => None,
    }
}

/// Normalize a status label to a cancer-death indicator.
pub fn normalize_status(label: &str) -> Option<u8> {
    let l = label.trim().to_ascii_lowercase();
    match l.as_str() {
        "died of disease" | "dead" | "deceased" | "1" => Some(1),
        "living" | "alive" | "0" | "died of other causes" => Some(0),
        _ => {
            // numeric encodings such as "1.0"
            match l.parse::<f64>() {
                Ok(x) if x == 1.0 => Some(1),
                Ok(x) if x == 0.0 => Some(0),
                _ => None,
            }
        }
    }
}

/// Event indicators read from a status column.
pub fn status_column(table: &CohortTable, name: &str) -> Result<Vec<Option<u8>>> {
    let col = table
        .column(name)
        .ok_or_else(|| Error::MissingColumn(name.to_owned()))?;
    Ok((0..table.n_rows())
        .map(|r| col.data.text(r).as_deref().and_then(normalize_status))
        .collect())
}

pub fn build_endpoint(table: &CohortTable, horizon: f64) -> Result<EndpointVector> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon {horizon}")));
    }
    let time_col = table
        .column(TIME_COLUMN)
        .ok_or_else(|| Error::MissingColumn(TIME_COLUMN.to_owned()))?;
    let ColumnData::Numeric(times) = &time_col.data else {
        return Err(Error::InvalidInput(format!(
            "`{TIME_COLUMN}` must be numeric"
        )));
    };
    if let Some(t) = times.iter().flatten().find(|t| **t < 0.0) {
        return Err(Error::InvalidInput(format!("negative follow-up time {t}")));
    }

    let status_name = if table.has_column(CANCER_STATUS_COLUMN) {
        CANCER_STATUS_COLUMN
    } else if table.has_column(OVERALL_STATUS_COLUMN) {
        OVERALL_STATUS_COLUMN
    } else {
        return Err(Error::MissingColumn(format!(
            "{CANCER_STATUS_COLUMN} or {OVERALL_STATUS_COLUMN}"
        )));
    };
    let event = status_column(table, status_name)?;

    let y = times
        .iter()
        .zip(&event)
        .map(|(t, e)| match (t, e) {
            (Some(t), Some(e)) => five_year_label(*t, *e, horizon),
            _ => None,
        })
        .collect();

    Ok(EndpointVector {
        horizon,
        time: times.clone(),
        event,
        y,
    })
}

/// Drop rows whose 5-year outcome is missing. Order is preserved.
pub fn filter_cohort(
    table: &CohortTable,
    endpoint: &EndpointVector,
) -> Result<(CohortTable, EndpointVector)> {
    if table.n_rows() != endpoint.len() {
        return Err(Error::InvalidInput(format!(
            "table has {} rows, endpoint has {}",
            table.n_rows(),
            endpoint.len()
        )));
    }
    let keep: Vec<usize> = (0..endpoint.len())
        .filter(|&r| endpoint.y[r].is_some())
        .collect();
    if keep.is_empty() {
        return Err(Error::EmptyCohort);
    }
    Ok((table.select_rows(&keep), endpoint.select(&keep)))
}

/// Which columns feed the clinical view; everything else (minus id and
/// survival columns) is genomic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ViewSpec {
    pub clinical_columns: Vec<String>,
    pub id_column: String,
    pub survival_columns: Vec<String>,
}

impl Default for ViewSpec {
    /// Clinical attributes of the METABRIC RNA/mutation file.
    fn default() -> Self {
        let clinical = [
            "patient_id",
            "age_at_diagnosis",
            "type_of_breast_surgery",
            "cancer_type",
            "cancer_type_detailed",
            "cellularity",
            "chemotherapy",
            "pam50_+_claudin-low_subtype",
            "cohort",
            "er_status_measured_by_ihc",
            "er_status",
            "neoplasm_histologic_grade",
            "her2_status_measured_by_snp6",
            "her2_status",
            "tumor_other_histologic_subtype",
            "hormone_therapy",
            "inferred_menopausal_state",
            "integrative_cluster",
            "primary_tumor_laterality",
            "lymph_nodes_examined_positive",
            "mutation_count",
            "nottingham_prognostic_index",
            "oncotree_code",
            "overall_survival_months",
            "overall_survival",
            "pr_status",
            "radio_therapy",
            "3-gene_classifier_subtype",
            "tumor_size",
            "tumor_stage",
            "death_from_cancer",
        ];
        ViewSpec {
            clinical_columns: clinical.iter().map(|s| s.to_string()).collect(),
            id_column: "patient_id".into(),
            survival_columns: [TIME_COLUMN, OVERALL_STATUS_COLUMN, CANCER_STATUS_COLUMN]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

impl ViewSpec {
    fn is_excluded(&self, name: &str) -> bool {
        name == self.id_column
            || self.survival_columns.iter().any(|s| s == name)
            || [TIME_COLUMN, OVERALL_STATUS_COLUMN, CANCER_STATUS_COLUMN].contains(&name)
    }
}

pub fn split_views(table: &CohortTable, spec: &ViewSpec) -> Result<(CohortTable, CohortTable)> {
    for name in spec.clinical_columns.iter().chain([&spec.id_column]) {
        if !table.has_column(name) {
            return Err(Error::MissingColumn(name.clone()));
        }
    }
    let clinical: HashSet<&str> = spec
        .clinical_columns
        .iter()
        .map(String::as_str)
        .filter(|c| !spec.is_excluded(c))
        .collect();
    let names = table.column_names();
    let clin_view = table.select_columns(names.iter().copied().filter(|n| clinical.contains(n)));
    let gen_view = table.select_columns(
        names
            .iter()
            .copied()
            .filter(|n| !clinical.contains(n) && !spec.is_excluded(n)),
    );
    if clin_view.n_cols() == 0 {
        return Err(Error::InvalidInput("clinical view is empty".into()));
    }
    if gen_view.n_cols() == 0 {
        return Err(Error::InvalidInput("genomic view is empty".into()));
    }
    Ok((clin_view, gen_view))
}

/// Unbiased sample variance over non-missing cells; `None` with fewer than two.
pub fn sample_variance(values: &[Option<f64>]) -> Option<f64> {
    let xs: Vec<f64> = values.iter().flatten().copied().collect();
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    Some(xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0))
}

/// Keep the `k` numeric columns with the largest variance, in table order.
pub fn variance_filter(genomic: &CohortTable, k: usize) -> Result<CohortTable> {
    let mut scored: Vec<(usize, f64)> = genomic
        .columns()
        .iter()
        .enumerate()
        .filter_map(|(i, c)| match &c.data {
            ColumnData::Numeric(v) => Some((i, sample_variance(v).unwrap_or(0.0))),
            ColumnData::Categorical(_) => None,
        })
        .collect();
    if scored.is_empty() {
        return Err(Error::InvalidInput("genomic view has no numeric columns".into()));
    }
    // stable sort: equal variances keep column order
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    scored.truncate(k);
    let keep: HashSet<usize> = scored.into_iter().map(|(i, _)| i).collect();
    let names = genomic
        .columns()
        .iter()
        .enumerate()
        .filter(|(i, _)| keep.contains(i))
        .map(|(_, c)| c.name.as_str());
    Ok(genomic.select_columns(names))
}
