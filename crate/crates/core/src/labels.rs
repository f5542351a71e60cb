//! Survey responses to binary outcome labels.
//!
//! Question ids and answer option order follow the two study instruments:
//! the sexual behavior and substance use survey and the three-item alcohol
//! use screener (AUDIT-C). Answer indices are 1-based positions in the
//! option lists below.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionId {
    MethOrInjection3mo,
    SubstanceTreatment3mo,
    InjectCocaine3mo,
    InjectMeth3mo,
    ShareEquipment3mo,
    InjectGroup3mo,
    TakesPrep,
    Partners3mo,
    CondomlessReceptive3mo,
    HivPositivePartners3mo,
    CondomlessInsertiveHivPositive3mo,
    AuditcQ1,
    AuditcQ2,
    AuditcQ3,
}

impl QuestionId {
    pub const ALL: [QuestionId; 14] = [
        QuestionId::MethOrInjection3mo,
        QuestionId::SubstanceTreatment3mo,
        QuestionId::InjectCocaine3mo,
        QuestionId::InjectMeth3mo,
        QuestionId::ShareEquipment3mo,
        QuestionId::InjectGroup3mo,
        QuestionId::TakesPrep,
        QuestionId::Partners3mo,
        QuestionId::CondomlessReceptive3mo,
        QuestionId::HivPositivePartners3mo,
        QuestionId::CondomlessInsertiveHivPositive3mo,
        QuestionId::AuditcQ1,
        QuestionId::AuditcQ2,
        QuestionId::AuditcQ3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QuestionId::MethOrInjection3mo => "meth_or_injection_3mo",
            QuestionId::SubstanceTreatment3mo => "substance_treatment_3mo",
            QuestionId::InjectCocaine3mo => "inject_cocaine_3mo",
            QuestionId::InjectMeth3mo => "inject_meth_3mo",
            QuestionId::ShareEquipment3mo => "share_equipment_3mo",
            QuestionId::InjectGroup3mo => "inject_group_3mo",
            QuestionId::TakesPrep => "takes_prep",
            QuestionId::Partners3mo => "partners_3mo",
            QuestionId::CondomlessReceptive3mo => "condomless_receptive_3mo",
            QuestionId::HivPositivePartners3mo => "hiv_positive_partners_3mo",
            QuestionId::CondomlessInsertiveHivPositive3mo => "condomless_insertive_hiv_positive_3mo",
            QuestionId::AuditcQ1 => "auditc_q1",
            QuestionId::AuditcQ2 => "auditc_q2",
            QuestionId::AuditcQ3 => "auditc_q3",
        }
    }

    /// Answer options in survey order.
    pub fn options(self) -> &'static [&'static str] {
        const YES_NO: &[&str] = &["Yes", "No", "Decline to answer"];
        match self {
            QuestionId::MethOrInjection3mo => &[
                "Yes, methamphetamines",
                "Yes, injectable drugs not prescribed",
                "Yes, used both",
                "Neither",
                "Decline to answer",
            ],
            QuestionId::SubstanceTreatment3mo
            | QuestionId::InjectCocaine3mo
            | QuestionId::InjectMeth3mo
            | QuestionId::ShareEquipment3mo
            | QuestionId::InjectGroup3mo
            | QuestionId::TakesPrep => YES_NO,
            QuestionId::Partners3mo => &[">10", "6-10", "1-5", "0", "Decline to answer"],
            QuestionId::CondomlessReceptive3mo => &["1 or more times", "0 times", "Decline to answer"],
            QuestionId::HivPositivePartners3mo => &[
                "More than 1 HIV+ male partners",
                "1 HIV+ male partner",
                "0",
                "Don't know",
                "Decline to answer",
            ],
            QuestionId::CondomlessInsertiveHivPositive3mo => {
                &["5 or more times", "0-4 times", "Decline to answer"]
            }
            QuestionId::AuditcQ1 => &[
                "Never",
                "Monthly or less",
                "2 to 4 times a month",
                "2 to 3 times a week",
                "four or more times a week",
            ],
            QuestionId::AuditcQ2 => &["1-2", "3-4", "5-6", "7-9", "10 or more"],
            QuestionId::AuditcQ3 => &[
                "Never",
                "Less than monthly",
                "monthly",
                "weekly",
                "daily or almost daily",
            ],
        }
    }

    /// True for "Decline to answer" and "Don't know" options.
    pub fn is_non_answer(self, answer_index: u8) -> bool {
        let idx = answer_index as usize;
        (1..=self.options().len()).contains(&idx)
            && matches!(
                self.options()[idx - 1],
                "Decline to answer" | "Don't know"
            )
    }
}

impl fmt::Display for QuestionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuestionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        QuestionId::ALL
            .into_iter()
            .find(|q| q.as_str() == s.trim())
            .ok_or_else(|| Error::Validation(format!("unknown question id `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyResponse {
    pub user_id: String,
    pub question_id: QuestionId,
    pub answer_index: u8,
}

impl SurveyResponse {
    pub fn new(user_id: impl Into<String>, question_id: QuestionId, answer_index: u8) -> Result<Self> {
        let n = question_id.options().len();
        if !(1..=n).contains(&(answer_index as usize)) {
            return Err(Error::Validation(format!(
                "{question_id}: answer index {answer_index} outside 1..={n}"
            )));
        }
        Ok(SurveyResponse {
            user_id: user_id.into(),
            question_id,
            answer_index,
        })
    }
}

/// AUDIT-C total: each item contributes `index − 1` points (0–4).
pub fn score_audit_c(q1: u8, q2: u8, q3: u8) -> Result<u8> {
    for (q, idx) in [(QuestionId::AuditcQ1, q1), (QuestionId::AuditcQ2, q2), (QuestionId::AuditcQ3, q3)] {
        if !(1..=5).contains(&idx) {
            return Err(Error::Validation(format!(
                "{q}: answer index {idx} outside 1..=5"
            )));
        }
    }
    Ok((q1 - 1) + (q2 - 1) + (q3 - 1))
}

pub const AUDIT_C_HIGH_THRESHOLD: u8 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    BingeMonthly,
    AuditcHigh,
    Over5Partners,
    TakesPrep,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [
        Outcome::BingeMonthly,
        Outcome::AuditcHigh,
        Outcome::Over5Partners,
        Outcome::TakesPrep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::BingeMonthly => "binge_monthly",
            Outcome::AuditcHigh => "auditc_high",
            Outcome::Over5Partners => "over5_partners",
            Outcome::TakesPrep => "takes_prep",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Outcome::ALL
            .into_iter()
            .find(|o| o.as_str() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown label `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelValue {
    Positive,
    Negative,
    Excluded,
}

impl LabelValue {
    pub fn from_bool(b: bool) -> Self {
        if b {
            LabelValue::Positive
        } else {
            LabelValue::Negative
        }
    }

    /// `Some(true)` for positive, `None` when excluded.
    pub fn as_bool(self) -> Option<bool> {
        match self {
            LabelValue::Positive => Some(true),
            LabelValue::Negative => Some(false),
            LabelValue::Excluded => None,
        }
    }

    pub fn as_csv(self) -> &'static str {
        match self {
            LabelValue::Positive => "1",
            LabelValue::Negative => "0",
            LabelValue::Excluded => "NA",
        }
    }

    pub fn parse_csv(s: &str) -> Result<Self> {
        match s.trim() {
            "1" => Ok(LabelValue::Positive),
            "0" => Ok(LabelValue::Negative),
            "NA" => Ok(LabelValue::Excluded),
            other => Err(Error::Validation(format!("bad label value `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    pub user_id: String,
    pub binge_monthly: LabelValue,
    pub auditc_high: LabelValue,
    pub over5_partners: LabelValue,
    pub takes_prep: LabelValue,
}

impl LabelSet {
    pub fn get(&self, outcome: Outcome) -> LabelValue {
        match outcome {
            Outcome::BingeMonthly => self.binge_monthly,
            Outcome::AuditcHigh => self.auditc_high,
            Outcome::Over5Partners => self.over5_partners,
            Outcome::TakesPrep => self.takes_prep,
        }
    }
}

/// All answers of one user, keyed by question.
pub type AnswerSheet = BTreeMap<QuestionId, u8>;

/// Collects responses per user. Repeating a question with the same answer is
/// tolerated; a different answer is an error naming the user.
pub fn collect_answers(responses: &[SurveyResponse]) -> Result<BTreeMap<String, AnswerSheet>> {
    let mut sheets: BTreeMap<String, AnswerSheet> = BTreeMap::new();
    let mut conflicts = Vec::new();
    for r in responses {
        let sheet = sheets.entry(r.user_id.clone()).or_default();
        match sheet.get(&r.question_id) {
            Some(&prev) if prev != r.answer_index => {
                conflicts.push(format!("{} ({})", r.user_id, r.question_id))
            }
            _ => {
                sheet.insert(r.question_id, r.answer_index);
            }
        }
    }
    if !conflicts.is_empty() {
        conflicts.dedup();
        return Err(Error::Validation(format!(
            "conflicting duplicate responses: {}",
            conflicts.join(", ")
        )));
    }
    Ok(sheets)
}

fn answered(sheet: &AnswerSheet, q: QuestionId) -> Option<u8> {
    sheet
        .get(&q)
        .copied()
        .filter(|&idx| !q.is_non_answer(idx))
}

/// Labels for one answer sheet. Each label depends only on its own source
/// question(s); a missing or non-answer source yields `Excluded`.
pub fn labels_for(user_id: &str, sheet: &AnswerSheet) -> LabelSet {
    let q3 = answered(sheet, QuestionId::AuditcQ3);
    let binge_monthly = q3.map_or(LabelValue::Excluded, |a| LabelValue::from_bool(a >= 3));
    let auditc_high = match (
        answered(sheet, QuestionId::AuditcQ1),
        answered(sheet, QuestionId::AuditcQ2),
        q3,
    ) {
        (Some(a), Some(b), Some(c)) => score_audit_c(a, b, c)
            .map(|s| LabelValue::from_bool(s >= AUDIT_C_HIGH_THRESHOLD))
            .unwrap_or(LabelValue::Excluded),
        _ => LabelValue::Excluded,
    };
    let over5_partners = answered(sheet, QuestionId::Partners3mo)
        .map_or(LabelValue::Excluded, |a| LabelValue::from_bool(a <= 2));
    let takes_prep = answered(sheet, QuestionId::TakesPrep)
        .map_or(LabelValue::Excluded, |a| LabelValue::from_bool(a == 1));
    LabelSet {
        user_id: user_id.to_string(),
        binge_monthly,
        auditc_high,
        over5_partners,
        takes_prep,
    }
}

/// Derives one [`LabelSet`] per responding user, ordered by user id.
pub fn derive_labels(responses: &[SurveyResponse]) -> Result<Vec<LabelSet>> {
    Ok(collect_answers(responses)?
        .iter()
        .map(|(user, sheet)| labels_for(user, sheet))
        .collect())
}

/// Reads `user_id,question_id,answer_index`.
pub fn read_survey_csv(path: &Path) -> Result<Vec<SurveyResponse>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::format(path, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["user_id", "question_id", "answer_index"] {
        return Err(Error::format(
            path,
            "expected header `user_id,question_id,answer_index`",
        ));
    }
    let mut out = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::format(path, e.to_string()))?;
        let at = |msg: String| Error::format(path, format!("row {}: {msg}", line + 1));
        if row.len() != 3 {
            return Err(at("expected 3 fields".into()));
        }
        let q: QuestionId = row[1].parse().map_err(|e: Error| at(e.to_string()))?;
        let idx: u8 = row[2]
            .trim()
            .parse()
            .map_err(|_| at(format!("bad answer index `{}`", &row[2])))?;
        out.push(SurveyResponse::new(row[0].trim(), q, idx).map_err(|e| at(e.to_string()))?);
    }
    Ok(out)
}

pub fn write_survey_csv(path: &Path, responses: &[SurveyResponse]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    let err = |e: csv::Error| Error::format(path, e.to_string());
    w.write_record(["user_id", "question_id", "answer_index"]).map_err(err)?;
    for r in responses {
        w.write_record([
            r.user_id.as_str(),
            r.question_id.as_str(),
            &r.answer_index.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub const LABEL_HEADER: [&str; 5] = [
    "user_id",
    "binge_monthly",
    "auditc_high",
    "over5_partners",
    "takes_prep",
];

pub fn write_labels_csv(path: &Path, labels: &[LabelSet]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    let err = |e: csv::Error| Error::format(path, e.to_string());
    w.write_record(LABEL_HEADER).map_err(err)?;
    for l in labels {
        w.write_record([
            l.user_id.as_str(),
            l.binge_monthly.as_csv(),
            l.auditc_high.as_csv(),
            l.over5_partners.as_csv(),
            l.takes_prep.as_csv(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_labels_csv(path: &Path) -> Result<Vec<LabelSet>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::format(path, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != LABEL_HEADER {
        return Err(Error::format(path, format!("expected header `{}`", LABEL_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::format(path, e.to_string()))?;
        let v = |i: usize| LabelValue::parse_csv(&row[i]).map_err(|e| Error::format(path, e.to_string()));
        out.push(LabelSet {
            user_id: row[0].to_string(),
            binge_monthly: v(1)?,
            auditc_high: v(2)?,
            over5_partners: v(3)?,
            takes_prep: v(4)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resp(user: &str, q: QuestionId, a: u8) -> SurveyResponse {
        SurveyResponse::new(user, q, a).unwrap()
    }

    #[test]
    fn audit_c_extremes_and_middle() {
        assert_eq!(score_audit_c(1, 1, 1).unwrap(), 0);
        assert_eq!(score_audit_c(5, 5, 5).unwrap(), 12);
        assert_eq!(score_audit_c(4, 3, 3).unwrap(), 7);
    }

    #[test]
    fn audit_c_rejects_out_of_range_and_names_question() {
        let err = score_audit_c(1, 6, 1).unwrap_err();
        assert!(err.to_string().contains("auditc_q2"));
        assert!(score_audit_c(0, 1, 1).is_err());
    }

    #[test]
    fn partner_six_to_ten_is_positive() {
        let l = derive_labels(&[resp("u", QuestionId::Partners3mo, 2)]).unwrap();
        assert_eq!(l[0].over5_partners, LabelValue::Positive);
        let l = derive_labels(&[resp("u", QuestionId::Partners3mo, 3)]).unwrap();
        assert_eq!(l[0].over5_partners, LabelValue::Negative);
    }

    #[test]
    fn all_declined_means_all_excluded() {
        // The alcohol screener has no decline option; its items are simply absent.
        let l = derive_labels(&[
            resp("u", QuestionId::Partners3mo, 5),
            resp("u", QuestionId::TakesPrep, 3),
        ])
        .unwrap();
        assert_eq!(l[0].binge_monthly, LabelValue::Excluded);
        assert_eq!(l[0].auditc_high, LabelValue::Excluded);
        assert_eq!(l[0].over5_partners, LabelValue::Excluded);
        assert_eq!(l[0].takes_prep, LabelValue::Excluded);
    }

    #[test]
    fn low_score_but_monthly_binge() {
        let l = derive_labels(&[
            resp("u", QuestionId::AuditcQ1, 1),
            resp("u", QuestionId::AuditcQ2, 1),
            resp("u", QuestionId::AuditcQ3, 3),
        ])
        .unwrap();
        assert_eq!(score_audit_c(1, 1, 3).unwrap(), 2);
        assert_eq!(l[0].auditc_high, LabelValue::Negative);
        assert_eq!(l[0].binge_monthly, LabelValue::Positive);
    }

    #[test]
    fn threshold_boundary() {
        let label = |a, b, c| {
            derive_labels(&[
                resp("u", QuestionId::AuditcQ1, a),
                resp("u", QuestionId::AuditcQ2, b),
                resp("u", QuestionId::AuditcQ3, c),
            ])
            .unwrap()[0]
                .auditc_high
        };
        assert_eq!(label(3, 3, 2), LabelValue::Negative); // 2 + 2 + 1
        assert_eq!(label(3, 3, 3), LabelValue::Positive); // 2 + 2 + 2
    }

    #[test]
    fn dont_know_excludes_only_its_question() {
        let sheet = AnswerSheet::from([
            (QuestionId::HivPositivePartners3mo, 4),
            (QuestionId::TakesPrep, 1),
        ]);
        assert!(QuestionId::HivPositivePartners3mo.is_non_answer(4));
        assert_eq!(labels_for("u", &sheet).takes_prep, LabelValue::Positive);
    }

    #[test]
    fn conflicting_duplicates_name_user() {
        let err = derive_labels(&[
            resp("alice", QuestionId::TakesPrep, 1),
            resp("alice", QuestionId::TakesPrep, 2),
        ])
        .unwrap_err();
        assert!(err.to_string().contains("alice"));
        // Identical repeats are fine.
        assert!(derive_labels(&[
            resp("bob", QuestionId::TakesPrep, 1),
            resp("bob", QuestionId::TakesPrep, 1),
        ])
        .is_ok());
    }

    #[test]
    fn answer_index_validated() {
        assert!(SurveyResponse::new("u", QuestionId::TakesPrep, 4).is_err());
        assert!(SurveyResponse::new("u", QuestionId::TakesPrep, 0).is_err());
    }

    #[test]
    fn question_ids_round_trip() {
        for q in QuestionId::ALL {
            assert_eq!(q.as_str().parse::<QuestionId>().unwrap(), q);
        }
    }

    #[test]
    fn csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let responses = vec![
            resp("u1", QuestionId::AuditcQ1, 2),
            resp("u1", QuestionId::TakesPrep, 3),
            resp("u2", QuestionId::Partners3mo, 1),
        ];
        let sp = dir.path().join("survey.csv");
        write_survey_csv(&sp, &responses).unwrap();
        assert_eq!(read_survey_csv(&sp).unwrap(), responses);

        let labels = derive_labels(&responses).unwrap();
        let lp = dir.path().join("labels.csv");
        write_labels_csv(&lp, &labels).unwrap();
        assert_eq!(read_labels_csv(&lp).unwrap(), labels);
        let text = std::fs::read_to_string(&lp).unwrap();
        assert!(text.starts_with("user_id,binge_monthly,auditc_high,over5_partners,takes_prep\n"));
        assert!(text.contains("u2,NA,NA,1,NA"));
    }
}
