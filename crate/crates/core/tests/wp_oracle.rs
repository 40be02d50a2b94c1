mod common;

use common::wp::check;

#[test]
fn wp_agrees_with_execution_counter() {
    let (n, bad) = check(&common::object("counter"));
    assert!(n > 0);
    assert_eq!(bad, 0);
}

#[test]
fn wp_agrees_with_execution_treiber() {
    assert_eq!(check(&common::object("treiber")).1, 0);
}

#[test]
fn wp_agrees_with_execution_msq() {
    assert_eq!(check(&common::object("msq")).1, 0);
}

#[test]
fn wp_agrees_with_execution_listset() {
    assert_eq!(check(&common::object("listset")).1, 0);
}

#[test]
fn wp_agrees_with_execution_straightline() {
    assert_eq!(check(&common::object("straightline")).1, 0);
}
