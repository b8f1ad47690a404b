//! Holds the `acceptance` test target, which checks the library and CLI end to end.
