import pytest
import torch

from segnet import SegModelConfig, UNet, UNetPP, build_model


def param_count(model):
    return sum(p.numel() for p in model.parameters())


def test_config_rejects_bad_architecture():
    with pytest.raises(ValueError, match="architecture"):
        SegModelConfig(architecture="resnet")


def test_config_rejects_indivisible_input_size():
    with pytest.raises(ValueError, match="multiple"):
        SegModelConfig(depth=4, input_size=100)  # 100 % 8 != 0


def test_config_rejects_small_base_channels():
    with pytest.raises(ValueError, match="base_channels"):
        SegModelConfig(base_channels=4)


def test_config_rejects_shallow_depth():
    with pytest.raises(ValueError, match="depth"):
        SegModelConfig(depth=1)


@pytest.mark.parametrize("arch", ["unet", "unetpp"])
def test_output_shape_equals_input_shape(arch):
    model = build_model(SegModelConfig(architecture=arch, depth=3, base_channels=8, input_size=32))
    model.eval()
    x = torch.rand(2, 1, 32, 32)
    with torch.no_grad():
        out = model(x)
    assert out.shape == (2, 1, 32, 32)


def test_default_config_forward_at_full_size():
    model = build_model(SegModelConfig())
    model.eval()
    with torch.no_grad():
        out = model(torch.rand(1, 1, 128, 128))
    assert out.shape == (1, 1, 128, 128)


@pytest.mark.parametrize("arch", ["unet", "unetpp"])
def test_outputs_are_probabilities(arch):
    model = build_model(SegModelConfig(architecture=arch, depth=3, base_channels=8, input_size=32))
    model.eval()
    with torch.no_grad():
        out = model(torch.rand(1, 1, 32, 32))
    assert float(out.min()) >= 0.0
    assert float(out.max()) <= 1.0


def test_nested_variant_has_strictly_more_parameters():
    for depth, channels in [(3, 8), (4, 16)]:
        plain = UNet(base_channels=channels, depth=depth)
        nested = UNetPP(base_channels=channels, depth=depth)
        assert param_count(nested) > param_count(plain)


def test_eval_forward_is_deterministic():
    model = build_model(SegModelConfig(depth=3, base_channels=8, input_size=32))
    model.eval()
    x = torch.rand(1, 1, 32, 32)
    with torch.no_grad():
        a, b = model(x), model(x)
    assert torch.equal(a, b)
