package toy;

public class Range {
    private final int lo;
    private final int hi;

    public Range(int lo, int hi) {
        this.lo = lo;
        this.hi = hi;
    }

    // lo > hi means empty; a comment is never mutated.
    public boolean contains(int x) {
        return x >= lo && x <= hi;
    }

    public boolean isEmpty() {
        return lo > hi;
    }

    public int count() {
        int n = 0;
        for (int i = lo; i <= hi; i++) {
            n++;
        }
        return n;
    }
}
