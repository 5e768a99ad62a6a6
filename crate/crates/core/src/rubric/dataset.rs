use std::path::{Path, PathBuf};

use crate::scale::DataValue;

/// A CSV table with a header row. Cells are kept as text; scales decide
/// how to read them (numbers, dates or categories).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub path: PathBuf,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Dataset {
    pub fn load(path: &Path) -> Result<Self, String> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(false)
            .from_path(path)
            .map_err(|e| e.to_string())?;
        let headers = reader
            .headers()
            .map_err(|e| e.to_string())?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = reader
            .records()
            .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<Result<Vec<Vec<String>>, _>>()
            .map_err(|e| e.to_string())?;
        Ok(Dataset {
            path: path.to_path_buf(),
            headers,
            rows,
        })
    }

    pub fn from_rows(headers: &[&str], rows: &[Vec<String>]) -> Self {
        Dataset {
            path: PathBuf::new(),
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: rows.to_vec(),
        }
    }

    /// Index of the first column named `field`.
    pub fn column_index(&self, field: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == field)
    }

    pub fn has_field(&self, field: &str) -> bool {
        self.column_index(field).is_some()
    }

    pub fn column(&self, field: &str) -> Option<Vec<DataValue>> {
        let i = self.column_index(field)?;
        Some(
            self.rows
                .iter()
                .map(|r| DataValue::Text(r[i].clone()))
                .collect(),
        )
    }

    /// Row-aligned pairs of two columns.
    pub fn pairs(&self, x_field: &str, y_field: &str) -> Option<Vec<(DataValue, DataValue)>> {
        Some(
            self.column(x_field)?
                .into_iter()
                .zip(self.column(y_field)?)
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}
