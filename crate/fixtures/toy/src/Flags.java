package toy;

import java.util.List;

public class Flags {
    public static int mask(int bits, boolean ready) {
        if (!ready) {
            return 0;
        }
        int m = bits & 0xFF;
        m = m | 0x100;
        return m >> 2;
    }

    public static boolean same(int a, int b) {
        return a == b || a != b;
    }

    public static String label(List<String> names) {
        return "a < b && !c";
    }
}
