"""Tabulate b(1/n) / b(1/(n+1)) against the closed form (1 + 1/n)^(1/alpha)."""

from levytrim.levy_measure import power_measure
from levytrim.stable_limits import norming


def main() -> None:
    print("alpha,n,ratio,closed_form,in_band")
    for alpha in (0.5, 0.8, 1.0, 1.2, 1.7):
        m = power_measure(alpha, 0.5, 0.5)
        for n in (100, 101, 125, 126, 200, 201, 1000):
            q = norming(m, 1 / n)[1] / norming(m, 1 / (n + 1))[1]
            print(f"{alpha},{n},{q:.6f},{(1 + 1 / n) ** (1 / alpha):.6f},{0.99 <= q <= 1.01}")


if __name__ == "__main__":
    main()
