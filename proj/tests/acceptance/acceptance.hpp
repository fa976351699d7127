#pragma once
#include <string>
namespace evrf::accept {
struct Context {
  std::string work_dir;
  int threads = 0;
};
// Each returns true on pass and prints its own detail lines.
bool criterion_1(Context&); bool criterion_2(Context&); bool criterion_3(Context&);
bool criterion_4(Context&); bool criterion_5(Context&); bool criterion_6(Context&);
bool criterion_7(Context&); bool criterion_8(Context&); bool criterion_9(Context&);
bool criterion_10(Context&);
}  // namespace evrf::accept
