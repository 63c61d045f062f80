mod common;

use common::{rng, uniform_vec};
use tensor_machines::data::{
    kfold, metric, parse_csv, parse_sparse_text, preprocess, preprocess_train, synth_tm_task,
    write_sparse_text, LabelColumn, Metric, PreprocessState,
};
use tensor_machines::matrix::norm2;
use tensor_machines::{Dataset, Error, Matrix, Task};

fn sparse(text: &str) -> tensor_machines::Result<Dataset> {
    parse_sparse_text(text.as_bytes(), Task::Regression)
}

fn random_dataset(seed: u64, n: usize, d: usize) -> Dataset {
    let mut r = rng(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| uniform_vec(&mut r, d)).collect();
    let y = uniform_vec(&mut r, n);
    Dataset::new(Matrix::from_rows(&rows).unwrap(), y, Task::Regression).unwrap()
}

#[test]
fn sparse_text_examples() {
    let a = sparse("1 1:0.5 3:2.0\n").unwrap();
    assert_eq!(a.y(), &[1.0]);
    assert_eq!(a.row(0), &[0.5, 0.0, 2.0]);

    let b = sparse("-1 2:1\r\n1 1:1\n").unwrap();
    assert_eq!((b.len(), b.dim()), (2, 2));
    assert_eq!(b.row(0), &[0.0, 1.0]);
    assert_eq!(b.row(1), &[1.0, 0.0]);
}

#[test]
fn sparse_text_errors() {
    assert!(matches!(
        sparse("1 3:1 2:1\n"),
        Err(Error::Parse { line: 1, .. })
    ));
    assert!(matches!(
        sparse("1 1:1\n2 1:x\n"),
        Err(Error::Parse { line: 2, .. })
    ));
    assert!(sparse("").is_err());
    assert!(parse_sparse_text("2 1:1\n".as_bytes(), Task::Binary).is_err());
}

#[test]
fn sparse_text_round_trip() {
    let data = random_dataset(1, 30, 5);
    let mut buf = Vec::new();
    write_sparse_text(&data, &mut buf).unwrap();
    let back = parse_sparse_text(&buf[..], Task::Regression).unwrap();
    assert_eq!(back.x(), data.x());
    assert_eq!(back.y(), data.y());
}

#[test]
fn csv_header_and_label_position() {
    let first = "y,a,b\n1,2,3\n4,5,6\n";
    let last = "2,3,1\n5,6,4\n";
    let a = parse_csv(first.as_bytes(), LabelColumn::First, Task::Regression).unwrap();
    let b = parse_csv(last.as_bytes(), LabelColumn::Last, Task::Regression).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.y(), &[1.0, 4.0]);
    assert_eq!(a.row(1), &[5.0, 6.0]);
    let c = parse_csv(last.as_bytes(), LabelColumn::Index(2), Task::Regression).unwrap();
    assert_eq!(c, b);

    let one = parse_csv("7,1.5\n".as_bytes(), LabelColumn::First, Task::Regression).unwrap();
    assert_eq!(one.len(), 1);
    assert!(parse_csv("1,2\n3\n".as_bytes(), LabelColumn::First, Task::Regression).is_err());
    assert!(parse_csv(
        "1,2\n3,x\n".as_bytes(),
        LabelColumn::First,
        Task::Regression
    )
    .is_err());
}

#[test]
fn zero_one_labels_are_remapped() {
    let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
    let d = Dataset::new(x.clone(), vec![0.0, 1.0], Task::Binary).unwrap();
    assert_eq!(d.y(), &[-1.0, 1.0]);
    assert!(matches!(
        Dataset::new(x, vec![0.5, 1.0], Task::Binary),
        Err(Error::InvalidLabel { .. })
    ));
}

#[test]
fn preprocess_example() {
    let x = Matrix::from_rows(&[vec![3.0, 0.0], vec![4.0, 0.0]]).unwrap();
    let train = Dataset::new(x, vec![1.0, 2.0], Task::Regression).unwrap();
    let (p, _) = preprocess(&train, &train).unwrap();
    assert_eq!(p.row(0), &[1.0, 0.0]);
    assert_eq!(p.row(1), &[1.0, 0.0]);
}

#[test]
fn rows_are_unit_or_zero_and_fixed_point() {
    let mut data = random_dataset(2, 50, 6);
    let mut rows: Vec<Vec<f64>> = data.x().iter_rows().map(<[f64]>::to_vec).collect();
    rows[7] = vec![0.0; 6];
    data = Dataset::new(
        Matrix::from_rows(&rows).unwrap(),
        data.y().to_vec(),
        Task::Regression,
    )
    .unwrap();

    let p = preprocess_train(&data);
    assert_eq!(p.state(), PreprocessState::RowNormalized);
    for (i, row) in p.x().iter_rows().enumerate() {
        let n = norm2(row);
        if i == 7 {
            assert_eq!(n, 0.0);
        } else {
            assert!((n - 1.0).abs() <= 1e-12);
        }
    }
    assert_eq!(preprocess_train(&p), p);
    let (again, _) = preprocess(&p, &p).unwrap();
    assert_eq!(again, p);
}

#[test]
fn test_row_permutation_commutes() {
    let train = random_dataset(3, 40, 4);
    let test = random_dataset(4, 9, 4);
    let perm = [4, 0, 8, 2, 6, 1, 7, 3, 5];
    let (_, a) = preprocess(&train, &test).unwrap();
    let (_, b) = preprocess(&train, &test.subset(&perm)).unwrap();
    assert_eq!(a.subset(&perm).x(), b.x());
}

#[test]
fn folds_partition_the_index_range() {
    for (n, k) in [(10, 10), (57, 10), (5, 1)] {
        let folds = kfold(n, k, 11).unwrap();
        assert_eq!(folds.len(), k);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..n).collect::<Vec<_>>());
        let (lo, hi) = (
            folds.iter().map(Vec::len).min().unwrap(),
            folds.iter().map(Vec::len).max().unwrap(),
        );
        assert!(hi - lo <= 1);
    }
    assert!(kfold(3, 4, 0).is_err());
}

#[test]
fn metric_examples() {
    let y = [0.5, -1.0, 2.0];
    assert_eq!(
        metric(&y, &y, Task::Regression).unwrap(),
        Metric::RelErr(0.0)
    );
    let twice: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
    assert_eq!(
        metric(&twice, &y, Task::Regression).unwrap(),
        Metric::RelErr(1.0)
    );
    let m = metric(&[1.0, -1.0, 1.0], &[1.0, 1.0, 1.0], Task::Binary).unwrap();
    assert_eq!(m, Metric::ErrorRate(1.0 / 3.0));
}

#[test]
fn synthetic_noise_floor() {
    let t = synth_tm_task(5, 6, 3, 2, 5000, 100, 0.1).unwrap();
    let pred: Vec<f64> = t
        .train
        .x()
        .iter_rows()
        .map(|x| t.truth.evaluate(x).unwrap())
        .collect();
    let resid: Vec<f64> = pred.iter().zip(t.train.y()).map(|(p, y)| y - p).collect();
    let floor = norm2(&resid) / norm2(t.train.y());
    assert_eq!(
        metric(&pred, t.train.y(), Task::Regression)
            .unwrap()
            .value(),
        floor
    );
    let sd = (resid.iter().map(|e| e * e).sum::<f64>() / resid.len() as f64).sqrt();
    assert!((sd - 0.1).abs() <= 0.005, "noise sd {sd}");

    let test_pred: Vec<f64> = t
        .test
        .x()
        .iter_rows()
        .map(|x| t.truth.evaluate(x).unwrap())
        .collect();
    assert_eq!(
        metric(&test_pred, t.test.y(), Task::Regression)
            .unwrap()
            .value(),
        0.0
    );
}
