package toy;

public class Calculator {
    public int add(int a, int b) {
        return a + b;
    }

    public int sub(int a, int b) {
        return a - b;
    }

    public int scale(int a) {
        int r = a * 3;
        r += 1;
        return r;
    }

    public int negate(int a) {
        return -a;
    }

    public int div(int a, int b) {
        return a / b;
    }
}
