#include <pybind11/pybind11.h>
PYBIND11_MODULE(_mhdrt, m) { m.doc() = "placeholder"; }
