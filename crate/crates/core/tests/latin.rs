mod common;

use common::{all_latin_squares, brute_transversals, load_dark, load_square, random_square};
use olsat::latin::{
    are_orthogonal, classify_transversal, colour, is_transversal, mate_from_transversals, symbol_classes,
    trp_from_decomposition, trp_row_cells, verify_trp, Cell, Colour, LatinSquare, Transversal, DARK_COLUMNS,
    DARK_PER_COLUMN,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn square_counts_by_order() {
    let counts: Vec<usize> = (1..=4).map(|n| all_latin_squares(n).len()).collect();
    assert_eq!(counts, [1, 2, 12, 576]);
    for sq in all_latin_squares(4) {
        assert_eq!(LatinSquare::from_flat(4, sq.as_flat().to_vec()).unwrap(), sq);
    }
}

#[test]
fn orthogonality_is_symmetric_on_order_three() {
    let all = all_latin_squares(3);
    let mut pairs = 0;
    for a in &all {
        for b in &all {
            let ab = are_orthogonal(a, b).unwrap();
            assert_eq!(ab, are_orthogonal(b, a).unwrap());
            if ab {
                pairs += 1;
                assert!(verify_trp(a, &trp_from_decomposition(a, &symbol_classes(b)).unwrap()).unwrap());
            }
        }
    }
    // Independent count: disjoint triples of brute-force transversals, each
    // labelled in 3! ways.
    let mut expected = 0;
    for a in &all {
        let ts = brute_transversals(a);
        for x in 0..ts.len() {
            for y in x + 1..ts.len() {
                for z in y + 1..ts.len() {
                    if (0..3).all(|r| ts[x][r] != ts[y][r] && ts[x][r] != ts[z][r] && ts[y][r] != ts[z][r]) {
                        expected += 6;
                    }
                }
            }
        }
    }
    assert_eq!(pairs, expected);
    assert!(pairs > 0);
}

#[test]
fn order_five_overlay() {
    let (sq, mate) = (load_square("five_square.txt"), load_square("five_mate.txt"));
    assert!(are_orthogonal(&sq, &mate).unwrap());
    let ts = symbol_classes(&mate);
    assert_eq!(ts.len(), 5);
    for t in &ts {
        assert!(t.is_transversal_of(&sq));
    }
    assert_eq!(mate_from_transversals(&sq, &ts).unwrap(), mate);
}

#[test]
fn order_ten_pair_and_colourings() {
    let (w, u) = (load_square("ten_w.txt"), load_square("ten_u.txt"));
    assert!(verify_trp(&w, &u).unwrap());
    for (sq, dark) in [(&w, load_dark("ten_w_dark.txt")), (&u, load_dark("ten_u_dark.txt"))] {
        assert_eq!(dark.len(), DARK_COLUMNS * DARK_PER_COLUMN);
        let c = colour(sq, &dark).unwrap();
        for col in 0..DARK_COLUMNS {
            let d = (0..10).filter(|&r| c.get(Cell::new(r, col)) == Colour::Dark).count();
            assert_eq!(d, DARK_PER_COLUMN);
        }
        assert!((0..10).all(|r| (DARK_COLUMNS..10).all(|col| c.get(Cell::new(r, col)) != Colour::Dark)));
    }
    let c = colour(&w, &load_dark("ten_w_dark.txt")).unwrap();
    for r in 0..10 {
        let t = Transversal::from_cells(10, &trp_row_cells(&w, &u, r).unwrap()).unwrap();
        assert!(classify_transversal(&t, &c).is_ok());
    }
}

#[test]
fn brute_transversals_agree_with_checker() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 3..=6 {
        let sq = random_square(n, &mut rng);
        let ts = brute_transversals(&sq);
        for cols in &ts {
            let cells: Vec<Cell> = cols.iter().enumerate().map(|(i, &c)| Cell::new(i, c as usize)).collect();
            assert!(is_transversal(&sq, &cells));
            assert!(Transversal::from_cols(cols.clone()).unwrap().is_transversal_of(&sq));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_squares_round_trip(seed in any::<u64>(), n in 1usize..=9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sq = random_square(n, &mut rng);
        prop_assert_eq!(LatinSquare::parse(&sq.to_text()).unwrap(), sq.clone());
        let labels = LatinSquare::cyclic(n);
        prop_assert_eq!(are_orthogonal(&sq, &labels).unwrap(), are_orthogonal(&labels, &sq).unwrap());
    }

    #[test]
    fn decompositions_give_mates_and_pairs(seed in any::<u64>(), half in 1usize..=4) {
        // Odd-order cyclic squares are orthogonal to the square with entries
        // 2i + j; any relabelling of its symbol classes is another mate.
        let n = 2 * half + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = LatinSquare::cyclic(n);
        let b = LatinSquare::from_flat(n, (0..n * n).map(|p| ((2 * (p / n) + p % n) % n) as u8).collect()).unwrap();
        prop_assert!(are_orthogonal(&a, &b).unwrap());
        let ts = symbol_classes(&b);
        let mut order: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(&mut order[..], &mut rng);
        let shuffled: Vec<Transversal> = order.iter().map(|&k| ts[k].clone()).collect();
        let mate = mate_from_transversals(&a, &shuffled).unwrap();
        prop_assert!(are_orthogonal(&a, &mate).unwrap());
        let q = trp_from_decomposition(&a, &shuffled).unwrap();
        prop_assert!(verify_trp(&a, &q).unwrap());
    }
}
