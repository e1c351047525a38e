#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "pgmn/checkpoint.hpp"

using namespace pgmn;

namespace {

Checkpoint sample(bool mu)
{
    Checkpoint ck{init_params({5, 3, 4}, 21, InitOptions{.random_memory = mu, .memory_unit = mu}), {}};
    ck.norm.x_d = {123.456789, 0.1};
    ck.norm.x_e = {-7.0 / 3.0, 1e-8};
    ck.norm.y = {std::numeric_limits<double>::min(), 1e300};
    return ck;
}

std::string text(const Checkpoint& ck)
{
    std::ostringstream out;
    save_checkpoint(out, ck);
    return out.str();
}

} // namespace

TEST(Checkpoint, RoundTripIsBitExact)
{
    for (bool mu : {true, false}) {
        const auto ck = sample(mu);
        std::istringstream in(text(ck));
        const auto back = load_checkpoint(in);
        EXPECT_EQ(back.params, ck.params);
        EXPECT_EQ(back.params.memory_unit, mu);
        EXPECT_EQ(back.norm.x_d.mean, ck.norm.x_d.mean);
        EXPECT_EQ(back.norm.x_e.mean, ck.norm.x_e.mean);
        EXPECT_EQ(back.norm.x_e.std, ck.norm.x_e.std);
        EXPECT_EQ(back.norm.y.mean, ck.norm.y.mean);
        EXPECT_EQ(back.norm.y.std, ck.norm.y.std);
        EXPECT_EQ(text(back), text(ck));
    }
}

TEST(Checkpoint, StartsWithVersionTagAndEndsWithEnd)
{
    const auto s = text(sample(true));
    EXPECT_EQ(s.rfind("pgmn-ckpt-1\n", 0), 0u);
    EXPECT_EQ(s.substr(s.size() - 4), "end\n");
}

TEST(Checkpoint, UnknownVersionRejected)
{
    auto s = text(sample(true));
    s.replace(0, 11, "pgmn-ckpt-9");
    std::istringstream in(s);
    EXPECT_THROW((void)load_checkpoint(in), FormatError);
}

TEST(Checkpoint, ShapeMismatchRejected)
{
    auto s = text(sample(true));
    const auto at = s.find("tensor m 3 1");
    ASSERT_NE(at, std::string::npos) << s.substr(0, 300);
    s.replace(at, 17, "tensor m 4 1");
    std::istringstream in(s);
    EXPECT_THROW((void)load_checkpoint(in), FormatError);
}

TEST(Checkpoint, TruncationRejected)
{
    const auto s = text(sample(false));
    std::istringstream in(s.substr(0, s.size() / 2));
    EXPECT_THROW((void)load_checkpoint(in), FormatError);
}

TEST(Checkpoint, ReloadedModelPredictsIdentically)
{
    const auto ck = sample(true);
    std::istringstream in(text(ck));
    const auto back = load_checkpoint(in);
    MaskedSample s;
    s.x_d = 0.37;
    s.x_e = -1.2;
    EXPECT_EQ(forward(s, back.params).yhat, forward(s, ck.params).yhat);
}
