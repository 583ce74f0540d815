#include <gtest/gtest.h>

#include <cstdlib>
#include <stdexcept>

#include "ge/parallel.hpp"

using namespace ge;

TEST(Parallel, ResultsInIndexOrder) {
    const auto out = parallel_map(1000, [](std::size_t i) { return i * i; });
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], i * i);
}

TEST(Parallel, LowestFailingIndexIsRethrown) {
    setenv("GE_THREADS", "4", 1);
    try {
        parallel_map(100, [](std::size_t i) -> int {
            if (i == 17 || i == 60) throw std::runtime_error(std::to_string(i));
            return 0;
        });
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "17");
    }
    unsetenv("GE_THREADS");
}

TEST(Parallel, ThreadCountHonoursEnvironment) {
    setenv("GE_THREADS", "3", 1);
    EXPECT_EQ(thread_count(), 3u);
    setenv("GE_THREADS", "zero", 1);
    EXPECT_GE(thread_count(), 1u);
    unsetenv("GE_THREADS");
}

TEST(Parallel, EmptyRange) {
    EXPECT_TRUE(parallel_map(0, [](std::size_t) { return 1; }).empty());
}
