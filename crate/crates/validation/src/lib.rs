//! Holds the `acceptance` test target, which runs the end-to-end checks of the
//! workspace against the built-in models.
