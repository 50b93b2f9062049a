use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Contract;
use crate::error::{Error, Result};

/// An observed call price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionQuote {
    pub maturity: f64,
    pub strike: f64,
    pub price: f64,
}

impl OptionQuote {
    pub fn new(maturity: f64, strike: f64, price: f64) -> Result<Self> {
        if !(maturity > 0.0 && maturity.is_finite()) {
            return Err(Error::param(
                "maturity",
                format!("{maturity} must be positive"),
            ));
        }
        if !(strike > 0.0 && strike.is_finite()) {
            return Err(Error::param("strike", format!("{strike} must be positive")));
        }
        if !price.is_finite() {
            return Err(Error::param("price", "must be finite"));
        }
        Ok(OptionQuote {
            maturity,
            strike,
            price,
        })
    }

    pub fn contract(&self) -> Contract {
        Contract {
            maturity: self.maturity,
            strike: self.strike,
        }
    }

    /// Whether the price is below `max(S₀ − K, 0)`; flagged, not rejected.
    pub fn below_intrinsic(&self, s0: f64) -> bool {
        self.price < (s0 - self.strike).max(0.0)
    }
}

/// Parses `maturity,strike,price` rows after a header line.
pub fn read_quotes<R: Read>(input: R) -> Result<Vec<OptionQuote>> {
    let mut rd = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rd.headers()?.clone();
    let expected = ["maturity", "strike", "price"];
    if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(Error::Malformed {
            line: 1,
            reason: format!(
                "expected header `maturity,strike,price`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Malformed {
            line,
            reason: e.to_string(),
        })?;
        let field = |j: usize| -> Result<f64> {
            rec.get(j)
                .unwrap_or_default()
                .parse::<f64>()
                .map_err(|e| Error::Malformed {
                    line,
                    reason: format!("column `{}`: {e}", expected[j]),
                })
        };
        let q =
            OptionQuote::new(field(0)?, field(1)?, field(2)?).map_err(|e| Error::Malformed {
                line,
                reason: e.to_string(),
            })?;
        out.push(q);
    }
    if out.is_empty() {
        return Err(Error::Empty("quotes"));
    }
    Ok(out)
}

pub fn load_quotes(path: impl AsRef<Path>) -> Result<Vec<OptionQuote>> {
    read_quotes(File::open(path)?)
}

pub fn write_quotes<W: Write>(out: W, quotes: &[OptionQuote]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(out);
    wr.write_record(["maturity", "strike", "price"])?;
    for q in quotes {
        wr.write_record([
            q.maturity.to_string(),
            q.strike.to_string(),
            q.price.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let qs = vec![
            OptionQuote::new(0.5, 0.9, 0.1234567890123).unwrap(),
            OptionQuote::new(1.0, 1.1, 0.05).unwrap(),
        ];
        let mut buf = Vec::new();
        write_quotes(&mut buf, &qs).unwrap();
        assert_eq!(read_quotes(buf.as_slice()).unwrap(), qs);
    }

    #[test]
    fn header_only_is_empty_error() {
        let err = read_quotes("maturity,strike,price\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Empty(_)));
    }

    #[test]
    fn malformed_row_reports_line() {
        let text = "maturity,strike,price\n0.5,1.0,0.1\n0.5,abc,0.1\n";
        match read_quotes(text.as_bytes()).unwrap_err() {
            Error::Malformed { line, .. } => assert_eq!(line, 3),
            e => panic!("{e}"),
        }
        let neg = "maturity,strike,price\n-1,1.0,0.1\n";
        assert!(matches!(
            read_quotes(neg.as_bytes()),
            Err(Error::Malformed { line: 2, .. })
        ));
    }

    #[test]
    fn intrinsic_flag() {
        assert!(OptionQuote::new(1.0, 0.8, 0.1)
            .unwrap()
            .below_intrinsic(1.0));
        assert!(!OptionQuote::new(1.0, 1.2, 0.0)
            .unwrap()
            .below_intrinsic(1.0));
    }
}
