#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "bandlab/linalg.hpp"

int main(int argc, char** argv) {
  bandlab::use_single_threaded_blas();
  doctest::Context ctx(argc, argv);
  return ctx.run();
}
