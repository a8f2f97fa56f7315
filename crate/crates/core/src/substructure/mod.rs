//! Substructure counting and substructure/label association.

mod cramers;
mod matcher;
mod pattern;
mod registry;

pub use cramers::{
    cramers_v, cramers_v_binary, rank_substructures, task_associations, write_association_csv,
    ContingencyTable, LabeledCounts, SubstructureAssociation, TableError, COUNT_CAP,
};
pub use matcher::{match_pattern, MatchContext};
pub use pattern::{AtomPredicate, BondPredicate, MatchMode, Pattern, PatternError};
pub use registry::{
    write_counts_csv, ReferenceCheck, Registry, RegistryEntry, RegistryError, SubstructureCounts,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::parse_smiles;

    fn count(name: &str, smiles: &str) -> usize {
        let reg = Registry::builtin();
        match_pattern(&parse_smiles(smiles).unwrap(), reg.get(name).unwrap())
    }

    #[test]
    fn registry_shape() {
        let reg = Registry::builtin();
        assert_eq!(reg.len(), 24);
        let groups = |g: &str| reg.entries().iter().filter(|e| e.group == g).count();
        assert_eq!((groups("ring"), groups("functional"), groups("redox")), (13, 10, 1));
    }

    #[test]
    fn references_match() {
        for check in Registry::builtin().check_references() {
            assert!(check.passed(), "{check:?}");
        }
    }

    #[test]
    fn count_examples() {
        assert_eq!(count("benzene", "Cc1ccccc1"), 1);
        assert_eq!(count("benzene", "CCO"), 0);
        assert_eq!(count("benzene", "C1=CC=CC=C1"), 1);
        assert_eq!(count("benzene", "c1ccc2ccccc2c1"), 2);
        assert_eq!(count("halogen", "ClCCl"), 2);
        assert_eq!(count("morpholine", "C1COCCN1"), 1);
        assert_eq!(count("ether", "CCO"), 0);
        assert_eq!(count("amide", "CC(=O)NC(C)=O"), 2);
        assert_eq!(count("ether_oxygen", "COc1ccc(OC)cc1"), 2);
    }

    #[test]
    fn count_all_benzene() {
        let reg = Registry::builtin();
        let counts = reg.count_all(&parse_smiles("c1ccccc1").unwrap());
        for (name, c) in reg.names().into_iter().zip(counts) {
            assert_eq!(c, usize::from(name == "benzene"), "{name}");
        }
        let counts = reg.count_all(&parse_smiles("CCO").unwrap());
        assert!(counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn cramers_examples() {
        let t = |c: Vec<Vec<u64>>| ContingencyTable::new(c).unwrap();
        assert!(cramers_v(&t(vec![vec![2, 2], vec![2, 2]])).unwrap().abs() < 1e-12);
        assert!((cramers_v(&t(vec![vec![5, 0], vec![0, 5]])).unwrap() - 1.0).abs() < 1e-12);
        assert!((t(vec![vec![5, 0], vec![0, 5]]).chi_squared() - 10.0).abs() < 1e-12);
        assert_eq!(cramers_v(&t(vec![vec![1, 0]])), None);
        assert_eq!(cramers_v(&t(vec![vec![3, 0], vec![0, 0]])), None);
        assert!(ContingencyTable::new(vec![vec![1], vec![1, 2]]).is_err());
    }

    #[test]
    fn ranking_prefers_the_determining_substructure() {
        let reg = Registry::builtin();
        let smiles = ["c1ccccc1", "CCO", "Cc1ccccc1", "CCN", "c1ccncc1", "CC(=O)N", "Clc1ccccc1", "CCCl"];
        let counts: Vec<_> = smiles.iter().map(|s| reg.count_all(&parse_smiles(s).unwrap())).collect();
        let b = reg.index_of("benzene").unwrap();
        let labels = counts.iter().map(|c| vec![Some(c[b] > 0), None]).collect();
        let data = LabeledCounts {
            dataset: "toy".into(),
            counts,
            labels,
        };
        let ranked = rank_substructures(&reg.names(), &[data]);
        assert_eq!(ranked[0].name, "benzene");
        assert!((ranked[0].avg_task.unwrap() - 1.0).abs() < 1e-12);
        // substructures absent from the corpus have a single category
        let absent = ranked.iter().find(|a| a.name == "tetrazole").unwrap();
        assert_eq!(absent.avg_task, None);
        let mut csv = Vec::new();
        write_association_csv(&["toy"], &ranked, &mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert!(csv.starts_with("substructure,toy,avg_task,avg_data\nbenzene,1.0000,1.0000,1.0000\n"));
    }
}
