//! Column-oriented data table consumed by the estimators. Numeric cells are
//! optional so missing values survive until listwise deletion; categorical
//! columns hold fixed-effect and cluster group labels.

use super::EconError;

#[derive(Debug, Clone)]
pub enum Column {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Default)]
pub struct DataTable {
    names: Vec<String>,
    columns: Vec<Column>,
    nrows: usize,
}

impl DataTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_columns(columns: Vec<(String, Column)>) -> Result<Self, EconError> {
        let mut table = Self::new();
        for (name, column) in columns {
            table.add_column(name, column)?;
        }
        Ok(table)
    }

    pub fn add_column(&mut self, name: impl Into<String>, column: Column) -> Result<(), EconError> {
        let name = name.into();
        if self.names.contains(&name) {
            return Err(EconError::DuplicateColumn(name));
        }
        if self.columns.is_empty() {
            self.nrows = column.len();
        } else if column.len() != self.nrows {
            return Err(EconError::LengthMismatch { column: name });
        }
        self.names.push(name);
        self.columns.push(column);
        Ok(())
    }

    pub fn add_numeric(&mut self, name: impl Into<String>, values: Vec<Option<f64>>) -> Result<(), EconError> {
        self.add_column(name, Column::Numeric(values))
    }

    pub fn add_categorical(&mut self, name: impl Into<String>, values: Vec<Option<String>>) -> Result<(), EconError> {
        self.add_column(name, Column::Categorical(values))
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.names.iter().position(|n| n == name).map(|i| &self.columns[i])
    }

    pub fn numeric(&self, name: &str) -> Result<&[Option<f64>], EconError> {
        match self.column(name) {
            Some(Column::Numeric(values)) => Ok(values),
            Some(_) => Err(EconError::ColumnType {
                column: name.to_string(),
                expected: "numeric",
            }),
            None => Err(EconError::MissingColumn(name.to_string())),
        }
    }

    /// Group keys for fixed effects or clustering. Numeric columns are
    /// accepted and formatted, so year columns work as groups.
    pub fn group_keys(&self, name: &str) -> Result<Vec<Option<String>>, EconError> {
        match self.column(name) {
            Some(Column::Categorical(values)) => Ok(values.clone()),
            Some(Column::Numeric(values)) => {
                Ok(values.iter().map(|v| v.map(|x| format!("{x}"))).collect())
            }
            None => Err(EconError::MissingColumn(name.to_string())),
        }
    }
}
