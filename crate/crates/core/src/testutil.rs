//! Fixture builders shared by unit tests.

use crate::mutator::{Mutant, MutationPoint, Operator};
use crate::runner::{MutantResult, Status};
use crate::store::ResultSet;

pub(crate) fn mutant(id: u64, class: &str) -> Mutant {
    Mutant {
        id,
        class_name: class.to_string(),
        file_path: class.to_string(),
        point: MutationPoint {
            operator: Operator::AorB,
            token_index: id as usize,
            replacement_text: "-".into(),
            line: 1,
        },
        original_text: "+".into(),
    }
}

/// One class per entry, named `C00`, `C01`, ...; each entry lists the
/// verdicts of that class's mutants. Ids run from 1 in class order.
pub(crate) fn result_set(classes: &[&[Status]]) -> ResultSet {
    let mut catalog = Vec::new();
    let mut results = Vec::new();
    let mut id = 1;
    for (c, statuses) in classes.iter().enumerate() {
        let class = format!("C{c:02}");
        for &status in statuses.iter() {
            catalog.push(mutant(id, &class));
            results.push(MutantResult {
                mutant_id: id,
                class_name: class.clone(),
                status,
                duration_ms: 0,
                equivalent_override: false,
            });
            id += 1;
        }
    }
    ResultSet::from_parts("fixture", catalog, results).unwrap()
}

/// Classes of the given sizes; every other mutant (by id) is killed.
pub(crate) fn result_set_with_sizes(sizes: &[usize]) -> ResultSet {
    let mut next = 0usize;
    let classes: Vec<Vec<Status>> = sizes
        .iter()
        .map(|&n| {
            (0..n)
                .map(|_| {
                    next += 1;
                    if next.is_multiple_of(2) {
                        Status::Killed
                    } else {
                        Status::Survived
                    }
                })
                .collect()
        })
        .collect();
    let refs: Vec<&[Status]> = classes.iter().map(Vec::as_slice).collect();
    result_set(&refs)
}
