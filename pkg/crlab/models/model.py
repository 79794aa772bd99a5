import torch


def reverse_gradient(gradient: torch.Tensor, lam: float) -> torch.Tensor:
    return -lam * gradient


class GradReverse(torch.autograd.Function):
    """Identity on activations; the backward pass multiplies gradients by -lambda."""

    @staticmethod
    def forward(ctx, x, lam):
        ctx.lam = float(lam)
        return x.view_as(x)

    @staticmethod
    def backward(ctx, grad_output):
        return reverse_gradient(grad_output, ctx.lam), None


def grad_reverse(x: torch.Tensor, lam: float) -> torch.Tensor:
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    return GradReverse.apply(x, lam)
