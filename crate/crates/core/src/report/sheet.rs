use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::ingest::PatientRecord;
use crate::seed::{derive_seed, rng};

use super::{escape_xml, relative_to, write_atomic};

/// Thumbnails shown per group.
const PER_GROUP: usize = 8;

/// HTML page with one row per group holding up to eight seeded-sampled
/// member thumbnails. Thumbnail paths are referenced relative to the sheet's
/// directory; patients without one get a labeled placeholder.
pub fn render_contact_sheet<T>(records: &[PatientRecord<T>], groups: &[usize], seed: u64, path: &Path) -> Result<()> {
    if groups.len() != records.len() {
        return Err(Error::LengthMismatch {
            left: groups.len(),
            right: records.len(),
        });
    }
    let n_groups = groups.iter().max().map_or(0, |&g| g + 1);
    let base = path.parent().unwrap_or(Path::new("."));
    let mut s = String::from(
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>BE group contact sheet</title>\n<style>\n\
         body { font-family: sans-serif; }\n\
         .group { display: flex; align-items: flex-start; gap: 6px; margin-bottom: 12px; }\n\
         .caption { width: 110px; font-weight: bold; }\n\
         figure { margin: 0; width: 128px; text-align: center; font-size: 11px; }\n\
         img { width: 128px; height: 128px; object-fit: cover; }\n\
         .placeholder { width: 128px; height: 128px; background: #dddddd; display: flex; align-items: center; justify-content: center; }\n\
         </style>\n</head>\n<body>\n<h1>BE group contact sheet</h1>\n",
    );
    for g in 0..n_groups {
        let members: Vec<usize> = (0..records.len()).filter(|&i| groups[i] == g).collect();
        let mut picked: Vec<usize> = sample(&mut rng(derive_seed(seed, g as u64)), members.len(), members.len().min(PER_GROUP))
            .into_iter()
            .map(|k| members[k])
            .collect();
        picked.sort_unstable();
        let _ = writeln!(
            s,
            "<div class=\"group\" id=\"group-{g}\">\n<div class=\"caption\">group {g}<br>{} patients</div>",
            members.len()
        );
        for i in picked {
            let rec = &records[i];
            let id = escape_xml(&rec.patient_id);
            match &rec.thumbnail_path {
                Some(t) if !t.is_empty() => {
                    let rel = relative_to(Path::new(t), base);
                    let src = escape_xml(&rel.to_string_lossy().replace('\\', "/"));
                    let _ = writeln!(s, "<figure class=\"thumb\"><img src=\"{src}\" alt=\"{id}\"><figcaption>{id}</figcaption></figure>");
                }
                _ => {
                    let _ = writeln!(
                        s,
                        "<figure class=\"thumb\"><div class=\"placeholder\">no thumbnail</div><figcaption>{id}</figcaption></figure>"
                    );
                }
            }
        }
        s.push_str("</div>\n");
    }
    s.push_str("</body>\n</html>\n");
    write_atomic(path, s.as_bytes())
}
