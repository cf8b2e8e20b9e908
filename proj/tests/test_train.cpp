#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <random>

#include "gradsal/checkpoint.hpp"
#include "gradsal/error.hpp"
#include "gradsal/synthetic.hpp"
#include "gradsal/train.hpp"
#include "test_util.hpp"

using namespace gradsal;

namespace {

std::vector<Sample> small_set(std::size_t n, std::uint64_t seed) {
    return to_training_samples(generate_dataset(n, 4, 32, seed));
}

void put_u32(std::vector<std::uint8_t>& b, std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

}  // namespace

TEST(SoftmaxCrossEntropy, UniformLogits) {
    std::vector<double> grad;
    EXPECT_NEAR(softmax_cross_entropy({0.0, 0.0, 0.0, 0.0}, 2, &grad), std::log(4.0), 1e-15);
    EXPECT_NEAR(grad[2], 0.25 - 1.0, 1e-15);
    EXPECT_NEAR(grad[0], 0.25, 1e-15);
}

TEST(SoftmaxCrossEntropy, StableForLargeLogits) {
    const double loss = softmax_cross_entropy({1000.0, 0.0}, 1);
    EXPECT_NEAR(loss, 1000.0, 1e-9);
}

TEST(Train, ZeroEpochsLeavesParametersUnchanged) {
    const Network net = make_desk_network(32, 32, 4, 5);
    TrainOptions opts;
    opts.epochs = 0;
    const auto data = small_set(8, 1);
    const TrainResult r = train(net, data, opts);
    const auto a = parameters(net), b = parameters(r.net);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(*a[i], *b[i]);
    EXPECT_TRUE(r.epoch_loss.empty());
}

TEST(Train, MemorizesTwentySamples) {
    const auto data = small_set(20, 2);
    TrainOptions opts;
    opts.epochs = 60;
    opts.batch_size = 4;
    opts.learning_rate = 0.01;
    const TrainResult r = train(make_desk_network(32, 32, 4, 3), data, opts);
    EXPECT_EQ(accuracy(r.net, data), 1.0);
}

TEST(Train, LossFallsOverWindows) {
    const auto data = small_set(40, 3);
    TrainOptions opts;
    opts.epochs = 15;
    opts.batch_size = 8;
    const TrainResult r = train(make_desk_network(32, 32, 4, 4), data, opts);
    ASSERT_EQ(r.epoch_loss.size(), 15u);
    auto window = [&](std::size_t from) {
        double s = 0.0;
        for (std::size_t e = from; e < from + 5; ++e) s += r.epoch_loss[e];
        return s / 5.0;
    };
    EXPECT_LT(window(5), window(0));
    EXPECT_LT(window(10), window(5));
}

TEST(Train, DeterministicForSeed) {
    const auto data = small_set(16, 4);
    TrainOptions opts;
    opts.epochs = 2;
    opts.batch_size = 4;
    const Network net = make_desk_network(32, 32, 4, 9);
    const TrainResult a = train(net, data, opts), b = train(net, data, opts);
    EXPECT_EQ(encode_checkpoint(a.net), encode_checkpoint(b.net));
}

TEST(Train, RejectsBadData) {
    const Network net = make_desk_network(32, 32, 4, 1);
    EXPECT_THROW(train(net, std::vector<Sample>{}, TrainOptions{}), DataError);
    auto data = small_set(2, 5);
    data[1].label = 7;
    EXPECT_THROW(train(net, data, TrainOptions{}), DataError);
}

TEST(Train, DivergenceIsNumericalError) {
    const auto data = small_set(8, 6);
    TrainOptions opts;
    opts.epochs = 5;
    opts.learning_rate = 1e200;
    EXPECT_THROW(train(make_desk_network(32, 32, 4, 1), data, opts), NumericalError);
}

TEST(Checkpoint, RoundTripKeepsLogits) {
    const auto data = small_set(8, 7);
    TrainOptions opts;
    opts.epochs = 1;
    Network net = train(make_desk_network(32, 32, 4, 2), data, opts).net;
    net.class_names = synthetic_class_names();
    gradsal::testing::TempDir dir("ckpt");
    save_network(net, dir.path() / "net.bin");
    const Network back = load_network(dir.path() / "net.bin");
    EXPECT_EQ(back.class_names, net.class_names);
    EXPECT_EQ(forward(back, data[3].image), forward(net, data[3].image));
    EXPECT_EQ(encode_checkpoint(back), encode_checkpoint(net));
}

TEST(Checkpoint, TruncationRejected) {
    const auto bytes = encode_checkpoint(make_desk_network(32, 32, 2, 1));
    for (std::size_t keep : {std::size_t{0}, std::size_t{7}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
        std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(keep));
        EXPECT_THROW(decode_checkpoint(cut), DataError) << keep;
    }
}

TEST(Checkpoint, VersionBumpRejected) {
    auto bytes = encode_checkpoint(make_desk_network(32, 32, 2, 1));
    put_u32(bytes, 8, kCheckpointVersion + 1);
    try {
        decode_checkpoint(bytes);
        FAIL() << "accepted a future version";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("version"), std::string::npos) << e.what();
    }
}

TEST(Checkpoint, CorruptionRejected) {
    auto bytes = encode_checkpoint(make_desk_network(32, 32, 2, 1));
    auto flipped = bytes;
    flipped[bytes.size() / 2] ^= 0x40;
    EXPECT_THROW(decode_checkpoint(flipped), DataError);
    auto magic = bytes;
    magic[0] = 'X';
    EXPECT_THROW(decode_checkpoint(magic), DataError);
    auto extra = bytes;
    extra.push_back(0);
    EXPECT_THROW(decode_checkpoint(extra), DataError);
}

TEST(Checkpoint, MissingFileIsDataError) {
    EXPECT_THROW(load_network("/nonexistent/gradsal/net.bin"), DataError);
}
