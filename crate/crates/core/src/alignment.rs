//! Cross-analyzer alignment: warnings from different analyzers that point at
//! the same defect are grouped, their labels reconciled by majority vote, and
//! two-way disagreements thrown out.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{canonical_warning_order, AlignedWarning, ScaId, WarningLabel};

/// Maximum start-line (and end-line) offset between identical warnings.
pub const LINE_TOLERANCE: u32 = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedGroup {
    /// At most one warning per analyzer, in corpus analyzer order.
    pub members: Vec<AlignedWarning>,
    pub resolved_label: WarningLabel,
}

impl AlignedGroup {
    pub fn contains_sca(&self, sca: &ScaId) -> bool {
        self.members.iter().any(|m| m.origin.sca == *sca)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discarded {
    pub members: Vec<AlignedWarning>,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AlignmentResult {
    pub groups: Vec<AlignedGroup>,
    pub discarded: Vec<Discarded>,
}

fn pair_identical(a: &AlignedWarning, b: &AlignedWarning, ignore_label: bool) -> bool {
    a.new_type == b.new_type
        && a.class_info == b.class_info
        && (ignore_label || a.label == b.label)
        && a.start_line.abs_diff(b.start_line) <= LINE_TOLERANCE
        && a.end_line.abs_diff(b.end_line) <= LINE_TOLERANCE
        && a.start_line <= b.end_line
        && b.start_line <= a.end_line
}

/// Whether the warnings describe one defect: same unified type and class
/// (and label unless `ignore_label`), start and end lines each within
/// [`LINE_TOLERANCE`], and overlapping line ranges. Checked pairwise.
pub fn identical(ws: &[&AlignedWarning], ignore_label: bool) -> bool {
    ws.iter().enumerate().all(|(i, a)| {
        ws[i + 1..]
            .iter()
            .all(|b| pair_identical(a, b, ignore_label))
    })
}

enum Resolution {
    Keep(WarningLabel),
    Discard(String),
}

fn resolve(members: &[AlignedWarning]) -> Resolution {
    let actionable = members
        .iter()
        .filter(|m| m.label == WarningLabel::Actionable)
        .count();
    let unactionable = members.len() - actionable;
    if unactionable == 0 {
        Resolution::Keep(WarningLabel::Actionable)
    } else if actionable == 0 {
        Resolution::Keep(WarningLabel::Unactionable)
    } else if actionable > unactionable {
        Resolution::Keep(WarningLabel::Actionable)
    } else if unactionable > actionable {
        Resolution::Keep(WarningLabel::Unactionable)
    } else {
        Resolution::Discard(format!(
            "label conflict: {actionable} actionable vs {unactionable} unactionable"
        ))
    }
}

/// Groups one project's labeled warnings across analyzers.
///
/// Analyzers are visited in `scas` order (any others present in `labeled`
/// follow in name order). Every unconsumed warning of an analyzer seeds a
/// group, and each later analyzer contributes the compatible unconsumed
/// warning closest in summed start-line distance, ties broken canonically.
/// `Unknown` warnings are ignored.
pub fn align_project(labeled: &BTreeMap<ScaId, Vec<AlignedWarning>>, scas: &[ScaId]) -> AlignmentResult {
    let mut order: Vec<&ScaId> = scas.iter().filter(|s| labeled.contains_key(*s)).collect();
    order.extend(labeled.keys().filter(|k| !scas.contains(k)));

    let lists: Vec<Vec<&AlignedWarning>> = order
        .iter()
        .map(|s| {
            let mut v: Vec<&AlignedWarning> = labeled[*s]
                .iter()
                .filter(|w| w.label != WarningLabel::Unknown)
                .collect();
            v.sort_by(|a, b| canonical_warning_order(a, b));
            v
        })
        .collect();
    let mut consumed: Vec<Vec<bool>> = lists.iter().map(|l| vec![false; l.len()]).collect();

    let mut result = AlignmentResult::default();
    for i in 0..lists.len() {
        for s in 0..lists[i].len() {
            if consumed[i][s] {
                continue;
            }
            consumed[i][s] = true;
            let mut members: Vec<&AlignedWarning> = vec![lists[i][s]];
            for j in i + 1..lists.len() {
                let mut best: Option<(u64, usize)> = None;
                for (c, cand) in lists[j].iter().enumerate() {
                    if consumed[j][c] {
                        continue;
                    }
                    if !members.iter().all(|m| pair_identical(m, cand, true)) {
                        continue;
                    }
                    let dist: u64 = members
                        .iter()
                        .map(|m| m.start_line.abs_diff(cand.start_line) as u64)
                        .sum();
                    if best.is_none_or(|(d, _)| dist < d) {
                        best = Some((dist, c));
                    }
                }
                if let Some((_, c)) = best {
                    consumed[j][c] = true;
                    members.push(lists[j][c]);
                }
            }
            let members: Vec<AlignedWarning> = members.into_iter().cloned().collect();
            match resolve(&members) {
                Resolution::Keep(label) => {
                    let members = members
                        .into_iter()
                        .map(|mut m| {
                            m.label = label;
                            m
                        })
                        .collect();
                    result.groups.push(AlignedGroup {
                        members,
                        resolved_label: label,
                    });
                }
                Resolution::Discard(reason) => result.discarded.push(Discarded { members, reason }),
            }
        }
    }
    result
        .groups
        .sort_by(|a, b| canonical_warning_order(first_canonical(&a.members), first_canonical(&b.members)));
    result
        .discarded
        .sort_by(|a, b| canonical_warning_order(first_canonical(&a.members), first_canonical(&b.members)));
    result
}

fn first_canonical(ms: &[AlignedWarning]) -> &AlignedWarning {
    ms.iter()
        .min_by(|a, b| canonical_warning_order(a, b))
        .expect("groups are non-empty")
}

/// Number of distinct warnings and of distinct actionable warnings; the
/// latter is the union oracle used as every analyzer's TP+FN.
pub fn distinct_counts(result: &AlignmentResult) -> (usize, usize) {
    let actionable = result
        .groups
        .iter()
        .filter(|g| g.resolved_label == WarningLabel::Actionable)
        .count();
    (result.groups.len(), actionable)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberDump {
    pub sca: ScaId,
    pub class: String,
    pub start_line: u32,
    pub end_line: u32,
    #[serde(rename = "type")]
    pub new_type: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupDump {
    pub label: WarningLabel,
    pub members: Vec<MemberDump>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscardDump {
    pub reason: String,
    pub members: Vec<MemberDump>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentDump {
    pub groups: Vec<GroupDump>,
    pub discarded: Vec<DiscardDump>,
}

impl From<&AlignmentResult> for AlignmentDump {
    fn from(r: &AlignmentResult) -> Self {
        let dump = |ms: &[AlignedWarning]| -> Vec<MemberDump> {
            ms.iter()
                .map(|m| MemberDump {
                    sca: m.origin.sca.clone(),
                    class: m.class_info.clone(),
                    start_line: m.start_line,
                    end_line: m.end_line,
                    new_type: m.new_type.clone(),
                })
                .collect()
        };
        AlignmentDump {
            groups: r
                .groups
                .iter()
                .map(|g| GroupDump {
                    label: g.resolved_label,
                    members: dump(&g.members),
                })
                .collect(),
            discarded: r
                .discarded
                .iter()
                .map(|d| DiscardDump {
                    reason: d.reason.clone(),
                    members: dump(&d.members),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Origin;
    use WarningLabel::{Actionable as A, Unactionable as U};

    fn sca(s: &str) -> ScaId {
        ScaId::new(s).unwrap()
    }

    fn w(s: &str, idx: usize, class: &str, start: u32, end: u32, ty: &str, label: WarningLabel) -> AlignedWarning {
        AlignedWarning {
            new_type: ty.into(),
            class_info: class.into(),
            start_line: start,
            end_line: end,
            label,
            origin: Origin { sca: sca(s), index: idx },
        }
    }

    fn scas() -> Vec<ScaId> {
        vec![sca("spotbugs"), sca("pmd"), sca("sonarqube")]
    }

    fn input(ws: Vec<AlignedWarning>) -> BTreeMap<ScaId, Vec<AlignedWarning>> {
        let mut m: BTreeMap<ScaId, Vec<AlignedWarning>> = scas().into_iter().map(|s| (s, vec![])).collect();
        for x in ws {
            m.get_mut(&x.origin.sca).unwrap().push(x);
        }
        m
    }

    #[test]
    fn triple_within_offsets_is_identical() {
        let a = w("spotbugs", 0, "C", 100, 102, "T", A);
        let b = w("pmd", 0, "C", 101, 103, "T", A);
        let c = w("sonarqube", 0, "C", 100, 101, "T", A);
        assert!(identical(&[&a, &b, &c], false));
        assert!(identical(&[&c, &a, &b], false));
    }

    #[test]
    fn offsets_without_overlap_are_not_identical() {
        let a = w("spotbugs", 0, "C", 100, 100, "T", A);
        let b = w("pmd", 0, "C", 103, 103, "T", A);
        assert!(!identical(&[&a, &b], false));
        assert!(!identical(&[&a, &b], true));
    }

    #[test]
    fn boxed_primitive_and_code_smell_align() {
        let class = "net.finmath.time.businessdaycalendar.BusinessdayCalendar";
        let a = w("spotbugs", 0, class, 139, 139, "N06", A);
        let b = w("sonarqube", 0, class, 139, 139, "N06", A);
        assert!(identical(&[&a, &b], false));
    }

    #[test]
    fn label_only_checked_when_asked() {
        let a = w("spotbugs", 0, "C", 10, 10, "T", A);
        let b = w("pmd", 0, "C", 10, 10, "T", U);
        assert!(!identical(&[&a, &b], false));
        assert!(identical(&[&a, &b], true));
    }

    #[test]
    fn voting_resolves_two_against_one() {
        let r = align_project(
            &input(vec![
                w("spotbugs", 0, "C", 10, 11, "T", A),
                w("pmd", 0, "C", 11, 12, "T", A),
                w("sonarqube", 0, "C", 10, 11, "T", U),
            ]),
            &scas(),
        );
        assert_eq!(r.groups.len(), 1);
        assert!(r.discarded.is_empty());
        assert_eq!(r.groups[0].resolved_label, A);
        assert_eq!(r.groups[0].members.len(), 3);
        assert!(r.groups[0].members.iter().all(|m| m.label == A));
    }

    #[test]
    fn two_way_conflict_is_discarded() {
        let r = align_project(
            &input(vec![
                w("spotbugs", 0, "C", 10, 11, "T", A),
                w("pmd", 0, "C", 11, 12, "T", U),
            ]),
            &scas(),
        );
        assert!(r.groups.is_empty());
        assert_eq!(r.discarded.len(), 1);
        assert_eq!(r.discarded[0].members.len(), 2);
    }

    #[test]
    fn incompatible_warnings_are_retained_as_singletons() {
        let r = align_project(
            &input(vec![
                w("spotbugs", 0, "C", 10, 10, "T", A),
                w("pmd", 0, "C", 40, 40, "T", A),
                w("sonarqube", 0, "D", 10, 10, "T", U),
            ]),
            &scas(),
        );
        assert_eq!(r.groups.len(), 3);
        assert!(r.groups.iter().all(|g| g.members.len() == 1));
        assert_eq!(distinct_counts(&r), (3, 2));
    }

    #[test]
    fn later_analyzers_pair_among_themselves() {
        let r = align_project(
            &input(vec![
                w("pmd", 0, "C", 10, 11, "T", U),
                w("sonarqube", 0, "C", 11, 11, "T", U),
            ]),
            &scas(),
        );
        assert_eq!(r.groups.len(), 1);
        assert_eq!(r.groups[0].members.len(), 2);
    }

    #[test]
    fn closest_partner_is_attached() {
        let r = align_project(
            &input(vec![
                w("spotbugs", 0, "C", 10, 13, "T", A),
                w("pmd", 0, "C", 12, 13, "T", A),
                w("pmd", 1, "C", 11, 13, "T", A),
            ]),
            &scas(),
        );
        let g = r.groups.iter().find(|g| g.members.len() == 2).unwrap();
        assert_eq!(g.members[1].origin.index, 1);
    }

    #[test]
    fn distinct_counts_basic() {
        assert_eq!(distinct_counts(&AlignmentResult::default()), (0, 0));
        let ws = (0..5)
            .map(|i| w("pmd", i, "C", 10 + 20 * i as u32, 10 + 20 * i as u32, "T", if i < 2 { A } else { U }))
            .collect();
        assert_eq!(distinct_counts(&align_project(&input(ws), &scas())), (5, 2));
    }

    #[test]
    fn union_counts_shared_defect_once() {
        let r = align_project(
            &input(vec![
                w("spotbugs", 0, "C", 10, 10, "T", A),
                w("pmd", 0, "C", 10, 11, "T", A),
                w("sonarqube", 0, "C", 9, 10, "T", A),
            ]),
            &scas(),
        );
        assert_eq!(distinct_counts(&r), (1, 1));
    }

    #[test]
    fn unknown_warnings_are_ignored() {
        let r = align_project(
            &input(vec![w("pmd", 0, "C", 10, 10, "T", WarningLabel::Unknown)]),
            &scas(),
        );
        assert!(r.groups.is_empty() && r.discarded.is_empty());
    }

    #[test]
    fn dump_shape() {
        let r = align_project(
            &input(vec![
                w("spotbugs", 0, "C", 10, 11, "T", A),
                w("pmd", 0, "C", 11, 12, "T", U),
                w("sonarqube", 0, "D", 1, 1, "T", U),
            ]),
            &scas(),
        );
        let json = serde_json::to_value(AlignmentDump::from(&r)).unwrap();
        assert_eq!(json["groups"][0]["label"], "unactionable");
        assert_eq!(json["groups"][0]["members"][0]["type"], "T");
        assert_eq!(json["discarded"][0]["members"].as_array().unwrap().len(), 2);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_input() -> impl Strategy<Value = Vec<AlignedWarning>> {
            proptest::collection::vec((0..3usize, 0..2u8, 1..25u32, 0..3u32, 0..2u8, any::<bool>()), 0..24)
                .prop_map(|raw| {
                    raw.into_iter()
                        .enumerate()
                        .map(|(i, (s, c, start, len, t, act))| {
                            w(
                                ["spotbugs", "pmd", "sonarqube"][s],
                                i,
                                &format!("C{c}"),
                                start,
                                start + len,
                                &format!("T{t}"),
                                if act { A } else { U },
                            )
                        })
                        .collect()
                })
        }

        proptest! {
            #[test]
            fn partition_and_permutation(ws in arb_input(), rot in 0usize..24) {
                let r = align_project(&input(ws.clone()), &scas());
                let mut covered: Vec<Origin> = r.groups.iter().flat_map(|g| g.members.iter())
                    .chain(r.discarded.iter().flat_map(|d| d.members.iter()))
                    .map(|m| m.origin.clone()).collect();
                covered.sort();
                let mut expected: Vec<Origin> = ws.iter().map(|w| w.origin.clone()).collect();
                expected.sort();
                prop_assert_eq!(covered, expected);
                for g in &r.groups {
                    let refs: Vec<&AlignedWarning> = g.members.iter().collect();
                    prop_assert!(identical(&refs, true));
                    prop_assert!(g.resolved_label != WarningLabel::Unknown);
                }
                let mut rotated = ws.clone();
                if !rotated.is_empty() {
                    let k = rot % rotated.len();
                    rotated.rotate_left(k);
                    rotated.reverse();
                }
                prop_assert_eq!(align_project(&input(rotated), &scas()), r);
            }

            #[test]
            fn identical_is_symmetric(ws in arb_input()) {
                for a in &ws {
                    for b in &ws {
                        prop_assert_eq!(identical(&[a, b], false), identical(&[b, a], false));
                    }
                }
            }
        }
    }
}
